//! Brute-force ground truth.
//!
//! Everything here enumerates coalitions exhaustively and is capped in `M`:
//! Shapley values at 20 features, the chain-rule term at 12 and the bound
//! constant at 10.

use nalgebra::DMatrix;

use crate::attribution::{Attribution, Method};
use crate::coalition::{binomial, Coalition};
use crate::error::{Error, Result};
use crate::value::ValueFunction;

pub const EXACT_MAX_FEATURES: usize = 20;
pub const DELTA_MAX_FEATURES: usize = 12;
pub const EPSILON_MAX_FEATURES: usize = 10;

const PARALLEL_THRESHOLD: usize = 1 << 12;

/// `1 / (m · C(m-1, s))` for every coalition size `s` in `0..m`.
pub(crate) fn shapley_weights(m: usize) -> Vec<f64> {
    (0..m).map(|s| 1.0 / (m as f64 * binomial(m - 1, s) as f64)).collect()
}

fn guard(what: &'static str, cap: usize, m: usize) -> Result<()> {
    if m > cap {
        return Err(Error::Resource { what, cap, m });
    }
    Ok(())
}

/// Exact Shapley values from all `2^M` coalition values.
pub fn exact_shapley(vf: &ValueFunction<'_>) -> Result<Attribution> {
    let m = vf.num_features();
    guard("exact Shapley", EXACT_MAX_FEATURES, m)?;
    let all: Vec<Coalition> = vf.full().subsets().collect();
    let values = if all.len() >= PARALLEL_THRESHOLD { vf.eval_batch_par(&all)? } else { vf.eval_batch(&all)? };
    let weights = shapley_weights(m);
    let mut phi = vec![0.0; m];
    for (mask, &v) in values.iter().enumerate() {
        let Some(&w) = weights.get(mask.count_ones() as usize) else { continue };
        for (i, p) in phi.iter_mut().enumerate() {
            if mask >> i & 1 == 0 {
                *p += w * (values[mask | 1 << i] - v);
            }
        }
    }
    Ok(Attribution::new(phi, Method::Exact, all.len() as u64, None, all.len() as u64))
}

/// `φ_i(f_v, S ∪ {i})`: Shapley value of `i` in the sub-game whose players are
/// `S ∪ {i}`, every other feature pinned at its reference.
pub fn exact_shapley_restricted(vf: &ValueFunction<'_>, i: usize, s: Coalition) -> Result<f64> {
    let m = vf.num_features();
    if i >= m {
        return Err(Error::Argument(format!("feature {i} out of range for M = {m}")));
    }
    if s.contains(i) {
        return Err(Error::Argument(format!("feature {i} is already in the cooperator set")));
    }
    guard("restricted Shapley", EXACT_MAX_FEATURES, s.len())?;
    let k = s.len();
    let mut acc = 0.0;
    for sub in s.subsets() {
        let w = 1.0 / binomial(k, sub.len()) as f64;
        acc += w * (vf.eval(sub.with(i))? - vf.eval(sub)?);
    }
    Ok(acc / (k + 1) as f64)
}

fn check_pair(vf: &ValueFunction<'_>, i: usize, j: usize) -> Result<()> {
    let m = vf.num_features();
    if i == j {
        return Err(Error::Argument(format!("features must differ, got i = j = {i}")));
    }
    if i >= m || j >= m {
        return Err(Error::Argument(format!("feature pair ({i}, {j}) out of range for M = {m}")));
    }
    Ok(())
}

/// `Σ_{a ∈ G_i, b ∈ G_j} d_a d_b (H_ab + H_ba)` with signed deviations `d`.
fn signed_cross_term(vf: &ValueFunction<'_>, h: &DMatrix<f64>, dev: &[f64], i: usize, j: usize) -> f64 {
    let g = vf.groups();
    let mut acc = 0.0;
    for &a in &g.features[i].columns {
        for &b in &g.features[j].columns {
            acc += dev[a] * dev[b] * (h[(a, b)] + h[(b, a)]);
        }
    }
    acc
}

/// The second-order chain-rule term `Δ_{i,j}` by enumeration of
/// `S ⊆ U \ {i, j}`, with the cross-Hessian taken at the masked input of
/// `S ∪ {i, j}` and weight `1 / (2 (M - |S| - 1) C(M, |S| + 1))`.
pub fn delta_term(vf: &ValueFunction<'_>, i: usize, j: usize) -> Result<f64> {
    check_pair(vf, i, j)?;
    let m = vf.num_features();
    guard("chain-rule term", DELTA_MAX_FEATURES, m)?;
    let rest = vf.full().without(i).without(j);
    let dev = vf.column_deviation();
    let mut acc = 0.0;
    for s in rest.subsets() {
        let h = vf.model().input_cross_hessian(&vf.masked_input(s.with(i).with(j)))?;
        let size = s.len();
        let w = 1.0 / (2.0 * (m - size - 1) as f64 * binomial(m, size + 1) as f64);
        acc += w * signed_cross_term(vf, &h, &dev, i, j);
    }
    Ok(acc)
}

/// The bound constant `ε_{i,j} = max_V ¼ |H_ij + H_ji|` over `V ⊆ U \ {i, j}`,
/// Hessians taken at the masked input of `U \ V`.
///
/// For grouped features the scalar `|H_ij + H_ji|` becomes the spectral norm of
/// the cross block `(H_ab + H_ba)_{a ∈ G_i, b ∈ G_j}`, which bounds the
/// group chain-rule term by `ε · ‖d_i‖ ‖d_j‖`.
pub fn epsilon_bound(vf: &ValueFunction<'_>, i: usize, j: usize) -> Result<f64> {
    check_pair(vf, i, j)?;
    let m = vf.num_features();
    guard("bound constant", EPSILON_MAX_FEATURES, m)?;
    let rest = vf.full().without(i).without(j);
    let gi = &vf.groups().features[i].columns;
    let gj = &vf.groups().features[j].columns;
    let mut best = 0.0f64;
    for v in rest.subsets() {
        let h = vf.model().input_cross_hessian(&vf.masked_input(v.complement()))?;
        let block = DMatrix::from_fn(gi.len(), gj.len(), |r, c| {
            let (a, b) = (gi[r], gj[c]);
            h[(a, b)] + h[(b, a)]
        });
        let norm = if block.len() == 1 { block[(0, 0)].abs() } else { block.singular_values().max() };
        best = best.max(0.25 * norm);
    }
    Ok(best)
}

/// `Σ_{s=0}^{M-2} C(M-2, s) · 2 / ((M - s - 1) · C(M, s + 1))`, which is 1 for all `M >= 2`.
pub fn chain_rule_weight_sum(m: usize) -> f64 {
    assert!(m >= 2);
    (0..=m - 2)
        .map(|s| binomial(m - 2, s) as f64 * 2.0 / ((m - s - 1) as f64 * binomial(m, s + 1) as f64))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Activation, Head, Layer, LayerSpec, MlpModel, Model, QuadraticModel};
    use crate::value::{FeatureGroup, FeatureKind, GroupMap};
    use nalgebra::{DMatrix, DVector};

    fn linear(w: &[f64]) -> MlpModel {
        MlpModel::new(
            w.len(),
            Head::Scalar,
            vec![Layer {
                weight: DMatrix::from_row_slice(1, w.len(), w),
                bias: DVector::from_element(1, 0.5),
                activation: Activation::Identity,
            }],
        )
        .unwrap()
    }

    #[test]
    fn additive_game() {
        let m = linear(&[2.0, 3.0]);
        let g = GroupMap::unnamed(2);
        let vf = ValueFunction::new(&m, &g, vec![1.0, 1.0], vec![0.0, 0.0]).unwrap();
        let a = exact_shapley(&vf).unwrap();
        assert_eq!(a.phi, vec![2.0, 3.0]);
        assert_eq!(a.budget_n, 4);
        assert_eq!(a.eval_count, 4);
    }

    #[test]
    fn product_game() {
        let q = QuadraticModel::product(2, 0, 1);
        let g = GroupMap::unnamed(2);
        let vf = ValueFunction::new(&q, &g, vec![1.0, 1.0], vec![0.0, 0.0]).unwrap();
        // by hand: φ1 = ½[(f({1}) - f(∅)) + (f({1,2}) - f({2}))] = ½[0 + 1]
        assert_eq!(exact_shapley(&vf).unwrap().phi, vec![0.5, 0.5]);
        assert_eq!(exact_shapley_restricted(&vf, 0, vf.empty()).unwrap(), 0.0);
        assert_eq!(delta_term(&vf, 0, 1).unwrap(), 0.5);
        assert_eq!(epsilon_bound(&vf, 0, 1).unwrap(), 0.5);
    }

    #[test]
    fn restricted_reduces_to_full() {
        let arch = [LayerSpec::new(6, Activation::Tanh), LayerSpec::new(1, Activation::Identity)];
        let m = MlpModel::init(5, &arch, Head::Scalar, 3).unwrap();
        let g = GroupMap::unnamed(5);
        let vf = ValueFunction::new(&m, &g, vec![1.0, -0.5, 2.0, 0.3, -1.0], vec![0.1; 5]).unwrap();
        let full = exact_shapley(&vf).unwrap();
        for i in 0..5 {
            let r = exact_shapley_restricted(&vf, i, vf.full().without(i)).unwrap();
            assert!((r - full.phi[i]).abs() < 1e-12);
        }
        assert!(exact_shapley_restricted(&vf, 1, vf.full()).is_err());
    }

    #[test]
    fn additive_restricted_is_independent_of_cooperators() {
        let m = linear(&[2.0, -1.0, 4.0]);
        let g = GroupMap::unnamed(3);
        let vf = ValueFunction::new(&m, &g, vec![1.0, 2.0, 3.0], vec![0.5, 0.5, 0.5]).unwrap();
        for bits in [0b000u64, 0b010, 0b100, 0b110] {
            let s = Coalition::from_bits(bits, 3).unwrap();
            assert!((exact_shapley_restricted(&vf, 0, s).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn affine_model_has_zero_delta_and_epsilon() {
        let m = linear(&[1.0, 2.0, 3.0, 4.0]);
        let g = GroupMap::unnamed(4);
        let vf = ValueFunction::new(&m, &g, vec![1.0, 2.0, 3.0, 4.0], vec![0.0; 4]).unwrap();
        for (i, j) in [(0, 1), (2, 3), (3, 0)] {
            assert_eq!(delta_term(&vf, i, j).unwrap(), 0.0);
            assert_eq!(epsilon_bound(&vf, i, j).unwrap(), 0.0);
        }
        assert!(delta_term(&vf, 1, 1).is_err());
        assert!(epsilon_bound(&vf, 2, 2).is_err());
    }

    #[test]
    fn quadratic_chain_rule_holds() {
        // f = x1 x2 + x2 x3
        let mut a = DMatrix::zeros(3, 3);
        a[(0, 1)] = 1.0;
        a[(1, 2)] = 1.0;
        let q = QuadraticModel::new(a, DVector::zeros(3), 0.0).unwrap();
        let g = GroupMap::unnamed(3);
        let vf = ValueFunction::new(&q, &g, vec![1.3, -0.7, 2.1], vec![0.2, 0.1, -0.4]).unwrap();
        let full = exact_shapley(&vf).unwrap().phi[0];
        let without_2 = exact_shapley_restricted(&vf, 0, vf.full().without(0).without(1)).unwrap();
        let delta = delta_term(&vf, 0, 1).unwrap();
        assert!((full - without_2 - delta).abs() < 1e-12);
    }

    #[test]
    fn null_player_gets_zero() {
        let m = linear(&[1.0, 0.0, -2.0]);
        let g = GroupMap::unnamed(3);
        let vf = ValueFunction::new(&m, &g, vec![1.0, 9.0, 3.0], vec![0.0; 3]).unwrap();
        assert_eq!(exact_shapley(&vf).unwrap().phi[1], 0.0);
    }

    #[test]
    fn symmetric_features_share_credit() {
        let arch = [LayerSpec::new(4, Activation::Tanh), LayerSpec::new(1, Activation::Identity)];
        let mut m = MlpModel::init(3, &arch, Head::Scalar, 21).unwrap();
        // make inputs 0 and 1 interchangeable
        let w = &mut m.layers_mut()[0].weight;
        for r in 0..4 {
            w[(r, 1)] = w[(r, 0)];
        }
        let g = GroupMap::unnamed(3);
        let vf = ValueFunction::new(&m, &g, vec![0.8, 0.8, -1.0], vec![0.0; 3]).unwrap();
        let phi = exact_shapley(&vf).unwrap().phi;
        assert!((phi[0] - phi[1]).abs() < 1e-12);
    }

    #[test]
    fn feature_cap_enforced() {
        let m = linear(&[1.0; 21]);
        let g = GroupMap::unnamed(21);
        let vf = ValueFunction::new(&m, &g, vec![1.0; 21], vec![0.0; 21]).unwrap();
        assert!(matches!(exact_shapley(&vf), Err(Error::Resource { cap: 20, m: 21, .. })));
    }

    #[test]
    fn weight_sum_is_one() {
        for m in 2..=12 {
            assert!((chain_rule_weight_sum(m) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn grouped_epsilon_bounds_gap() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
        let q = QuadraticModel::random(5, &mut rng);
        let g = GroupMap {
            features: vec![
                FeatureGroup { name: "a".into(), columns: vec![0, 1], kind: FeatureKind::Categorical },
                FeatureGroup { name: "b".into(), columns: vec![2], kind: FeatureKind::Continuous },
                FeatureGroup { name: "c".into(), columns: vec![3, 4], kind: FeatureKind::Continuous },
            ],
        };
        let vf = ValueFunction::new(&q, &g, vec![1.0, -0.5, 0.3, 0.9, -1.2], vec![0.1, 0.2, -0.3, 0.0, 0.4]).unwrap();
        let phi = exact_shapley(&vf).unwrap().phi;
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    continue;
                }
                let without = exact_shapley_restricted(&vf, i, vf.full().without(i).without(j)).unwrap();
                let gap = phi[i] - without;
                assert!((gap - delta_term(&vf, i, j).unwrap()).abs() < 1e-12);
                let eps = epsilon_bound(&vf, i, j).unwrap();
                assert!(gap.abs() <= eps * vf.feature_deviation(i) * vf.feature_deviation(j) + 1e-12);
            }
        }
        let _ = q.input_dim();
    }
}

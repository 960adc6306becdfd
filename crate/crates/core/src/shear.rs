//! Shapley estimation through contributive-cooperator selection.
//!
//! For each feature `i` the estimator
//!
//! 1. scores every other feature by its cross-contribution
//!    `η_ij = |x_i - x̄_i| · |H_ij + H_ji| · |x_j - x̄_j|`, with `H` the input
//!    cross-Hessian of the model at the unmasked instance;
//! 2. keeps the `k = log2(N/2)` highest-scoring features as cooperators `S_i`;
//! 3. walks all `2^k` subsets `S_n ⊆ S_i`, each joined with a subset `V_n` of
//!    the remaining features, where `V_n` and its mirror `V_{N/2+1-n}` are
//!    complements of one another;
//! 4. averages the preceding differences with Shapley weights over `S_i ∪ {i}`.
//!
//! Every feature costs exactly `N` value-function calls, and the whole
//! explanation one Hessian extraction.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::attribution::{Attribution, Method};
use crate::coalition::{binomial, Coalition};
use crate::error::{Error, Result};
use crate::rng;
use crate::value::{CountingEval, ValueFunction};

/// Symmetric, non-negative interaction scores with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossContribution {
    eta: DMatrix<f64>,
}

impl CrossContribution {
    pub fn from_matrix(eta: DMatrix<f64>) -> Result<Self> {
        if !eta.is_square() {
            return Err(Error::Argument("cross-contribution must be square".into()));
        }
        let n = eta.nrows();
        for i in 0..n {
            if eta[(i, i)] != 0.0 {
                return Err(Error::Argument(format!("diagonal entry {i} is not zero")));
            }
            for j in 0..n {
                let v = eta[(i, j)];
                if !v.is_finite() || v < 0.0 || v != eta[(j, i)] {
                    return Err(Error::Argument(format!("entry ({i}, {j}) breaks symmetry or sign")));
                }
            }
        }
        Ok(Self { eta })
    }

    pub fn num_features(&self) -> usize {
        self.eta.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.eta[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.eta
    }

    /// `Σ_{j ∈ s} η_ij`.
    pub fn row_sum(&self, i: usize, s: Coalition) -> f64 {
        s.iter().map(|j| self.eta[(i, j)]).sum()
    }
}

/// Cross-contribution scores from a single Hessian at the unmasked instance.
///
/// Grouped features sum `|d_a| |H_ab + H_ba| |d_b|` over their column pairs.
pub fn cross_contribution(vf: &ValueFunction<'_>) -> Result<CrossContribution> {
    let h = vf.model().input_cross_hessian(vf.instance())?;
    let dev: Vec<f64> = vf.column_deviation().iter().map(|d| d.abs()).collect();
    let groups = &vf.groups().features;
    let m = groups.len();
    let mut eta = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i + 1..m {
            let mut acc = 0.0;
            for &a in &groups[i].columns {
                for &b in &groups[j].columns {
                    acc += dev[a] * (h[(a, b)] + h[(b, a)]).abs() * dev[b];
                }
            }
            eta[(i, j)] = acc;
            eta[(j, i)] = acc;
        }
    }
    Ok(CrossContribution { eta })
}

/// The `k` features `j != i` with the largest `η_ij`, ties to the smaller index.
pub fn select_cooperators(eta: &CrossContribution, i: usize, k: usize) -> Result<Coalition> {
    let m = eta.num_features();
    if i >= m {
        return Err(Error::Argument(format!("feature {i} out of range for M = {m}")));
    }
    if k >= m {
        return Err(Error::Argument(format!("cannot select {k} cooperators among {} other features", m - 1)));
    }
    let mut others: Vec<usize> = (0..m).filter(|&j| j != i).collect();
    // stable sort keeps ascending index order among equal scores
    others.sort_by(|&a, &b| eta.get(i, b).total_cmp(&eta.get(i, a)));
    Coalition::from_indices(others.into_iter().take(k), m)
}

/// Coalition pairs `(S_n, V_n)` for one feature.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    pub feature: usize,
    pub cooperators: Coalition,
    /// `N/2` entries, `S_n` in increasing mask order.
    pub pairs: Vec<(Coalition, Coalition)>,
}

impl SamplingPlan {
    /// `U \ S_i \ {i}`.
    pub fn non_cooperators(&self) -> Coalition {
        self.cooperators.complement().without(self.feature)
    }

    /// Value-function calls [`estimate_feature`] will make.
    pub fn evaluations(&self) -> u64 {
        2 * self.pairs.len() as u64
    }
}

/// Antithetic plan over the non-cooperators `R = U \ S_i \ {i}`.
///
/// The first half of the `V_n` are uniform subsets of `R`; the mirrored index
/// `N/2 + 1 - n` takes `R \ V_n`. With a single subset (`S_i = ∅`) the one
/// draw stands unpaired.
pub fn build_plan<R: Rng + ?Sized>(cooperators: Coalition, i: usize, rng: &mut R) -> Result<SamplingPlan> {
    let m = cooperators.num_features();
    if i >= m {
        return Err(Error::Argument(format!("feature {i} out of range for M = {m}")));
    }
    if cooperators.contains(i) {
        return Err(Error::Argument(format!("feature {i} cannot cooperate with itself")));
    }
    let rest = cooperators.complement().without(i);
    let subsets: Vec<Coalition> = cooperators.subsets().collect();
    let half = subsets.len();
    let mut vs = vec![Coalition::empty(m); half];
    if half == 1 {
        vs[0] = draw_subset(rest, rng);
    } else {
        for n in 0..half / 2 {
            let v = draw_subset(rest, rng);
            vs[n] = v;
            vs[half - 1 - n] = rest.difference(v);
        }
    }
    Ok(SamplingPlan { feature: i, cooperators, pairs: subsets.into_iter().zip(vs).collect() })
}

/// Uniform over the subsets of `universe`: each member kept with probability ½.
fn draw_subset<R: Rng + ?Sized>(universe: Coalition, rng: &mut R) -> Coalition {
    Coalition::from_bits_unchecked(rng.gen::<u64>() & universe.bits(), universe.num_features())
}

/// `(1/(k+1)) Σ_n C(k, |S_n|)^{-1} [f_v({i} ∪ S_n ∪ V_n) - f_v(S_n ∪ V_n)]`.
pub fn estimate_feature(vf: &ValueFunction<'_>, plan: &SamplingPlan) -> Result<f64> {
    estimate_counted(&CountingEval::new(vf), plan)
}

fn estimate_counted(eval: &CountingEval<'_, '_>, plan: &SamplingPlan) -> Result<f64> {
    let k = plan.cooperators.len();
    let i = plan.feature;
    let mut acc = 0.0;
    for &(s, v) in &plan.pairs {
        let base = s.union(v);
        let w = 1.0 / binomial(k, s.len()) as f64;
        acc += w * (eval.eval(base.with(i))? - eval.eval(base)?);
    }
    Ok(acc / (k + 1) as f64)
}

fn check_budget(n: u64, m: usize) -> Result<u32> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::Argument(format!("SHEAR budget must be a power of two >= 2, got {n}")));
    }
    let k = n.trailing_zeros() - 1;
    if k as usize > m.saturating_sub(1) {
        return Err(Error::Argument(format!("SHEAR budget {n} exceeds 2^M = 2^{m}")));
    }
    Ok(k)
}

fn explain_feature(vf: &ValueFunction<'_>, eta: &CrossContribution, i: usize, k: usize, seed: u64) -> Result<(f64, u64)> {
    let cooperators = select_cooperators(eta, i, k)?;
    let mut rng = rng::stream(seed, i as u64);
    let plan = build_plan(cooperators, i, &mut rng)?;
    let eval = CountingEval::new(vf);
    let phi = estimate_counted(&eval, &plan)?;
    Ok((phi, eval.calls()))
}

/// SHEAR attribution with per-feature budget `N` (a power of two, `2 <= N <= 2^M`).
pub fn shear_explain(vf: &ValueFunction<'_>, n: u64, seed: u64) -> Result<Attribution> {
    let m = vf.num_features();
    let k = check_budget(n, m)? as usize;
    let eta = cross_contribution(vf)?;
    let mut phi = Vec::with_capacity(m);
    let mut calls = 0;
    for i in 0..m {
        let (p, c) = explain_feature(vf, &eta, i, k, seed)?;
        phi.push(p);
        calls += c;
    }
    let mut out = Attribution::new(phi, Method::Shear, n, Some(seed), calls);
    out.backward_count = 1;
    Ok(out)
}

/// [`shear_explain`] with features processed on the rayon pool; same output.
pub fn shear_explain_par(vf: &ValueFunction<'_>, n: u64, seed: u64) -> Result<Attribution> {
    let m = vf.num_features();
    let k = check_budget(n, m)? as usize;
    let eta = cross_contribution(vf)?;
    let per_feature: Vec<(f64, u64)> =
        (0..m).into_par_iter().map(|i| explain_feature(vf, &eta, i, k, seed)).collect::<Result<_>>()?;
    let calls = per_feature.iter().map(|p| p.1).sum();
    let mut out = Attribution::new(per_feature.into_iter().map(|p| p.0).collect(), Method::Shear, n, Some(seed), calls);
    out.backward_count = 1;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::exact_shapley;
    use crate::model::{Activation, Head, Layer, LayerSpec, MlpModel, QuadraticModel};
    use crate::value::GroupMap;
    use nalgebra::DVector;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(idx: &[usize], m: usize) -> Coalition {
        Coalition::from_indices(idx.iter().copied(), m).unwrap()
    }

    fn linear(w: &[f64]) -> MlpModel {
        MlpModel::new(
            w.len(),
            Head::Scalar,
            vec![Layer {
                weight: DMatrix::from_row_slice(1, w.len(), w),
                bias: DVector::zeros(1),
                activation: Activation::Identity,
            }],
        )
        .unwrap()
    }

    fn tanh_model(d: usize, seed: u64) -> MlpModel {
        let arch = [
            LayerSpec::new(12, Activation::Tanh),
            LayerSpec::new(8, Activation::Tanh),
            LayerSpec::new(1, Activation::Identity),
        ];
        MlpModel::init(d, &arch, Head::Scalar, seed).unwrap()
    }

    #[test]
    fn eta_examples() {
        let q = QuadraticModel::product(2, 0, 1);
        let g = GroupMap::unnamed(2);
        let vf = ValueFunction::new(&q, &g, vec![1.0, 1.0], vec![0.0, 0.0]).unwrap();
        let eta = cross_contribution(&vf).unwrap();
        assert_eq!(eta.get(0, 1), 2.0);
        assert_eq!(eta.get(1, 0), 2.0);
        assert_eq!(eta.get(0, 0), 0.0);

        let lin = linear(&[1.0, 2.0, 3.0]);
        let g3 = GroupMap::unnamed(3);
        let vf = ValueFunction::new(&lin, &g3, vec![1.0, 2.0, 3.0], vec![0.0; 3]).unwrap();
        assert_eq!(cross_contribution(&vf).unwrap().matrix(), &DMatrix::zeros(3, 3));

        let t = tanh_model(3, 1);
        let vf = ValueFunction::new(&t, &g3, vec![0.4, 0.4, 0.4], vec![0.4; 3]).unwrap();
        assert_eq!(cross_contribution(&vf).unwrap().matrix(), &DMatrix::zeros(3, 3));
    }

    fn eta_row(row: &[f64]) -> CrossContribution {
        let m = row.len();
        let mut e = DMatrix::zeros(m, m);
        for j in 1..m {
            e[(0, j)] = row[j];
            e[(j, 0)] = row[j];
        }
        CrossContribution::from_matrix(e).unwrap()
    }

    #[test]
    fn selection_examples() {
        // η_1· = (-, 5, 2, 7) picks features 2 and 4 (indices 1 and 3)
        let eta = eta_row(&[0.0, 5.0, 2.0, 7.0]);
        assert_eq!(select_cooperators(&eta, 0, 2).unwrap(), c(&[1, 3], 4));
        let zero = eta_row(&[0.0; 4]);
        assert_eq!(select_cooperators(&zero, 0, 2).unwrap(), c(&[1, 2], 4));
        assert_eq!(select_cooperators(&zero, 2, 3).unwrap(), c(&[0, 1, 3], 4));
        assert_eq!(select_cooperators(&zero, 2, 0).unwrap(), Coalition::empty(4));
        assert!(select_cooperators(&zero, 0, 4).is_err());
    }

    #[test]
    fn antithetic_plan_mirrors_table() {
        // M = 6, i = 1, S_1 = {2, 3} (zero-based: i = 0, S = {1, 2})
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let plan = build_plan(c(&[1, 2], 6), 0, &mut rng).unwrap();
        let s: Vec<_> = plan.pairs.iter().map(|p| p.0).collect();
        assert_eq!(s, vec![c(&[], 6), c(&[1], 6), c(&[2], 6), c(&[1, 2], 6)]);
        let rest = c(&[3, 4, 5], 6);
        assert_eq!(plan.non_cooperators(), rest);
        let v: Vec<_> = plan.pairs.iter().map(|p| p.1).collect();
        assert_eq!(v[2], rest.difference(v[1]));
        assert_eq!(v[3], rest.difference(v[0]));
        assert_eq!(plan.evaluations(), 8);

        // the printed example V = ({5}, {5,6}, {4}, {4,6}) is one such plan
        let printed = [c(&[4], 6), c(&[4, 5], 6), c(&[3], 6), c(&[3, 5], 6)];
        assert_eq!(printed[2], rest.difference(printed[1]));
        assert_eq!(printed[3], rest.difference(printed[0]));
    }

    #[test]
    fn full_cooperators_leave_nothing_to_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let plan = build_plan(c(&[0, 2, 3], 4), 1, &mut rng).unwrap();
        assert!(plan.pairs.iter().all(|p| p.1.is_empty()));
        assert!(build_plan(c(&[0, 1], 4), 1, &mut rng).is_err());
    }

    #[test]
    fn product_game_estimate() {
        let q = QuadraticModel::product(2, 0, 1);
        let g = GroupMap::unnamed(2);
        let vf = ValueFunction::new(&q, &g, vec![1.0, 1.0], vec![0.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let plan = build_plan(c(&[1], 2), 0, &mut rng).unwrap();
        assert_eq!(estimate_feature(&vf, &plan).unwrap(), 0.5);
    }

    #[test]
    fn affine_model_any_plan_is_exact() {
        let lin = linear(&[2.0, -1.0, 0.5, 3.0, 1.0]);
        let g = GroupMap::unnamed(5);
        let vf = ValueFunction::new(&lin, &g, vec![1.0, 2.0, 3.0, 4.0, 5.0], vec![0.5; 5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let plan = build_plan(c(&[3], 5), 1, &mut rng).unwrap();
        assert!((estimate_feature(&vf, &plan).unwrap() - (-1.5)).abs() < 1e-15);
        let a = shear_explain(&vf, 2, 9).unwrap();
        for (i, w) in [2.0, -1.0, 0.5, 3.0, 1.0].iter().enumerate() {
            assert!((a.phi[i] - w * (vf.instance()[i] - 0.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn full_budget_matches_exact() {
        for (d, seed) in [(3usize, 0u64), (5, 1), (7, 2)] {
            let t = tanh_model(d, seed);
            let g = GroupMap::unnamed(d);
            let x: Vec<f64> = (0..d).map(|j| (j as f64 * 0.7).sin() * 2.0).collect();
            let vf = ValueFunction::new(&t, &g, x, vec![0.1; d]).unwrap();
            let exact = exact_shapley(&vf).unwrap();
            let est = shear_explain(&vf, 1 << d, 5).unwrap();
            for (a, b) in exact.phi.iter().zip(&est.phi) {
                assert!((a - b).abs() < 1e-9);
            }
            assert_eq!(est.eval_count, (d as u64) << d);
        }
    }

    #[test]
    fn budget_validation_and_accounting() {
        let t = tanh_model(4, 3);
        let g = GroupMap::unnamed(4);
        let vf = ValueFunction::new(&t, &g, vec![1.0, -1.0, 0.5, 0.2], vec![0.0; 4]).unwrap();
        for bad in [0, 1, 3, 12, 32] {
            assert!(shear_explain(&vf, bad, 0).is_err(), "N = {bad}");
        }
        let a = shear_explain(&vf, 8, 11).unwrap();
        let b = shear_explain(&vf, 8, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.eval_count, 8 * 4);
        assert_eq!(a.backward_count, 1);
        assert_eq!(shear_explain_par(&vf, 8, 11).unwrap(), a);
    }

    proptest! {
        #[test]
        fn plans_pair_complements(bits in 0u64..256, i in 0usize..8, seed in any::<u64>()) {
            let coop = Coalition::from_bits(bits & !(1 << i), 8).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let plan = build_plan(coop, i, &mut rng).unwrap();
            let rest = plan.non_cooperators();
            let half = plan.pairs.len();
            prop_assert_eq!(half, 1 << coop.len());
            let mut seen: Vec<u64> = plan.pairs.iter().map(|p| p.0.bits()).collect();
            seen.dedup();
            prop_assert_eq!(seen.len(), half);
            for (n, &(s, v)) in plan.pairs.iter().enumerate() {
                prop_assert_eq!(s.difference(coop), Coalition::empty(8));
                prop_assert_eq!(v.difference(rest), Coalition::empty(8));
                if half > 1 {
                    let mirror = plan.pairs[half - 1 - n].1;
                    prop_assert_eq!(v.union(mirror), rest);
                    prop_assert!(v.intersection(mirror).is_empty());
                }
            }
        }

        #[test]
        fn greedy_selection_is_optimal(vals in proptest::collection::vec(0.0f64..10.0, 45), i in 0usize..10, k in 0usize..10) {
            let mut e = DMatrix::zeros(10, 10);
            let mut it = vals.iter();
            for a in 0..10 {
                for b in a + 1..10 {
                    let v = (*it.next().unwrap() * 4.0).round() / 4.0; // force ties
                    e[(a, b)] = v;
                    e[(b, a)] = v;
                }
            }
            let eta = CrossContribution::from_matrix(e).unwrap();
            let picked = select_cooperators(&eta, i, k).unwrap();
            let best = (0u64..1 << 10)
                .filter(|b| b >> i & 1 == 0 && b.count_ones() as usize == k)
                .map(|b| eta.row_sum(i, Coalition::from_bits(b, 10).unwrap()))
                .fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(picked.len(), k);
            prop_assert!((eta.row_sum(i, picked) - best).abs() < 1e-12);
        }
    }
}

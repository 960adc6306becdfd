use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;

use crate::attribution::{Attribution, Method};
use crate::coalition::{binomial, Coalition};
use crate::error::{Error, Result};
use crate::rng;
use crate::value::{CountingEval, ValueFunction};

/// Ridge added to the normal matrix when it is not positive definite.
pub const RIDGE: f64 = 1e-10;

const PIVOT_TOLERANCE: f64 = 1e-12;

/// Shapley kernel `π(S) = (M - 1) / (C(M, |S|) |S| (M - |S|))` for a proper, non-empty `S`.
pub fn kernel_weight(m: usize, size: usize) -> f64 {
    assert!(size > 0 && size < m, "kernel weight needs 0 < |S| < M");
    (m - 1) as f64 / (binomial(m, size) as f64 * size as f64 * (m - size) as f64)
}

/// One regression row: indicator of `coalition`, weight `π`, target `f_v(S) - f_v(∅)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSample {
    pub coalition: Coalition,
    pub weight: f64,
    pub value: f64,
}

/// Draws proper coalitions with probability proportional to their kernel weight:
/// the size with probability ∝ `(M - 1) / (s (M - s))`, then uniformly within that size.
#[derive(Debug, Clone)]
pub struct KernelSampler {
    m: usize,
    cumulative: Vec<f64>,
}

impl KernelSampler {
    pub fn new(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::Argument(format!("kernel sampling needs M >= 2, got {m}")));
        }
        let mut acc = 0.0;
        let cumulative = (1..m)
            .map(|s| {
                acc += 1.0 / (s * (m - s)) as f64;
                acc
            })
            .collect();
        Ok(Self { m, cumulative })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Coalition {
        let total = *self.cumulative.last().unwrap();
        let u = rng.gen::<f64>() * total;
        let s = 1 + self.cumulative.iter().position(|&c| u < c).unwrap_or(self.m - 2);
        let mut bits = 0u64;
        for j in index::sample(rng, self.m, s) {
            bits |= 1 << j;
        }
        Coalition::from_bits_unchecked(bits, self.m)
    }
}

fn proper_count(m: usize) -> u64 {
    (1u64 << m) - 2
}

fn all_proper(m: usize) -> Vec<Coalition> {
    (1..(1u64 << m) - 1).map(|b| Coalition::from_bits_unchecked(b, m)).collect()
}

/// `count` distinct proper coalitions in draw order. Asking for at least as many as
/// exist returns all of them in mask order.
pub fn draw_coalitions<R: Rng + ?Sized>(m: usize, count: usize, rng: &mut R) -> Result<Vec<Coalition>> {
    let sampler = KernelSampler::new(m)?;
    if count as u64 >= proper_count(m) {
        return Ok(all_proper(m));
    }
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let s = sampler.draw(rng);
        if seen.insert(s.bits()) {
            out.push(s);
        }
    }
    Ok(out)
}

/// `count` distinct complementary pairs `(S, U \ S)`.
pub fn draw_pairs<R: Rng + ?Sized>(m: usize, count: usize, rng: &mut R) -> Result<Vec<(Coalition, Coalition)>> {
    let sampler = KernelSampler::new(m)?;
    let available = proper_count(m) / 2;
    if count as u64 >= available {
        // canonical member of each pair: the one without the top feature
        return Ok((1..1u64 << (m - 1))
            .map(|b| {
                let s = Coalition::from_bits_unchecked(b, m);
                (s, s.complement())
            })
            .collect());
    }
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let s = sampler.draw(rng);
        let key = s.bits().min(s.complement().bits());
        if seen.insert(key) {
            out.push((s, s.complement()));
        }
    }
    Ok(out)
}

/// Efficiency-constrained weighted least squares:
/// `min Σ π_n (b_n - 1_{S_n}ᵀ φ)²` subject to `Σ φ = total`.
///
/// Returns the solution and whether [`RIDGE`] had to be added.
pub fn solve_constrained(samples: &[KernelSample], m: usize, total: f64) -> Result<(Vec<f64>, bool)> {
    let mut a = DMatrix::<f64>::zeros(m, m);
    let mut c = DVector::<f64>::zeros(m);
    for smp in samples {
        let members: Vec<usize> = smp.coalition.iter().collect();
        for &p in &members {
            c[p] += smp.weight * smp.value;
            for &q in &members {
                a[(p, q)] += smp.weight;
            }
        }
    }
    constrained_from_normal(a, c, total)
}

pub(crate) fn constrained_from_normal(a: DMatrix<f64>, c: DVector<f64>, total: f64) -> Result<(Vec<f64>, bool)> {
    let m = a.nrows();
    let scale = a.diagonal().amax();
    let well_posed = |ch: &nalgebra::Cholesky<f64, nalgebra::Dyn>| {
        let pivot = ch.l_dirty().diagonal().amin();
        pivot * pivot > PIVOT_TOLERANCE * scale
    };
    let (chol, regularized) = match a.clone().cholesky().filter(well_posed) {
        Some(ch) => (ch, false),
        None => {
            let ridged = a + DMatrix::identity(m, m) * RIDGE;
            let ch = ridged
                .cholesky()
                .ok_or_else(|| Error::Input("regression design is singular even with ridge".into()))?;
            (ch, true)
        }
    };
    let ones = DVector::from_element(m, 1.0);
    let a_inv_c = chol.solve(&c);
    let a_inv_1 = chol.solve(&ones);
    let lambda = (a_inv_c.sum() - total) / a_inv_1.sum();
    let phi = a_inv_c - a_inv_1 * lambda;
    if phi.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("regression produced non-finite attributions".into()));
    }
    Ok((phi.iter().copied().collect(), regularized))
}

/// Kernel SHAP on an explicit list of proper coalitions.
///
/// Makes `2 + coalitions.len()` value-function calls.
pub fn kernel_shap_with(vf: &ValueFunction<'_>, coalitions: &[Coalition]) -> Result<(Vec<f64>, bool, u64)> {
    let m = vf.num_features();
    let eval = CountingEval::new(vf);
    let v0 = eval.eval(vf.empty())?;
    let v1 = eval.eval(vf.full())?;
    let mut samples = Vec::with_capacity(coalitions.len());
    for &s in coalitions {
        if s.is_empty() || s.len() == m {
            return Err(Error::Argument(format!("coalition {s:?} is not proper")));
        }
        samples.push(KernelSample { coalition: s, weight: kernel_weight(m, s.len()), value: eval.eval(s)? - v0 });
    }
    let (phi, regularized) = solve_constrained(&samples, m, v1 - v0)?;
    Ok((phi, regularized, eval.calls()))
}

/// Kernel SHAP over every proper coalition; recovers exact Shapley values.
pub fn kernel_shap_enumerated(vf: &ValueFunction<'_>) -> Result<Attribution> {
    let m = vf.num_features();
    let coalitions = all_proper(m);
    let (phi, regularized, calls) = kernel_shap_with(vf, &coalitions)?;
    let mut out = Attribution::new(phi, Method::KernelShap, 1 << m, None, calls);
    out.regularized = regularized;
    Ok(out)
}

fn check_budget(m: usize, budget: u64) -> Result<()> {
    if m < 2 {
        return Err(Error::Argument("kernel estimators need M >= 2".into()));
    }
    if budget < m as u64 + 2 {
        return Err(Error::Argument(format!("kernel budget {budget} is below M + 2 = {}", m + 2)));
    }
    Ok(())
}

/// Kernel SHAP with `budget` value-function calls in total: `f_v(∅)`, `f_v(U)`
/// and `budget - 2` distinct kernel-weighted coalitions.
pub fn kernel_shap(vf: &ValueFunction<'_>, budget: u64, seed: u64) -> Result<Attribution> {
    let m = vf.num_features();
    check_budget(m, budget)?;
    let mut rng = rng::stream(seed, 0);
    let coalitions = draw_coalitions(m, (budget - 2) as usize, &mut rng)?;
    let (phi, regularized, calls) = kernel_shap_with(vf, &coalitions)?;
    let mut out = Attribution::new(phi, Method::KernelShap, budget, Some(seed), calls);
    out.regularized = regularized;
    Ok(out)
}

/// Kernel SHAP on explicit complementary pairs.
pub fn ks_pair_with(vf: &ValueFunction<'_>, pairs: &[(Coalition, Coalition)]) -> Result<(Vec<f64>, bool, u64)> {
    let flat: Vec<Coalition> = pairs.iter().flat_map(|&(s, t)| [s, t]).collect();
    kernel_shap_with(vf, &flat)
}

/// Paired Kernel SHAP: `(budget - 2) / 2` coalitions, each joined by its complement.
pub fn ks_pair(vf: &ValueFunction<'_>, budget: u64, seed: u64) -> Result<Attribution> {
    let m = vf.num_features();
    check_budget(m, budget)?;
    if !budget.is_multiple_of(2) {
        return Err(Error::Argument(format!("paired budget must be even, got {budget}")));
    }
    let mut rng = rng::stream(seed, 0);
    let pairs = draw_pairs(m, ((budget - 2) / 2) as usize, &mut rng)?;
    let (phi, regularized, calls) = ks_pair_with(vf, &pairs)?;
    let mut out = Attribution::new(phi, Method::KsPair, budget, Some(seed), calls);
    out.regularized = regularized;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::exact_shapley;
    use crate::model::{Activation, Head, Layer, LayerSpec, MlpModel};
    use crate::value::GroupMap;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tanh_model(d: usize, seed: u64) -> MlpModel {
        let arch = [LayerSpec::new(10, Activation::Tanh), LayerSpec::new(1, Activation::Identity)];
        MlpModel::init(d, &arch, Head::Scalar, seed).unwrap()
    }

    fn linear(w: &[f64]) -> MlpModel {
        MlpModel::new(
            w.len(),
            Head::Scalar,
            vec![Layer {
                weight: DMatrix::from_row_slice(1, w.len(), w),
                bias: DVector::from_element(1, -1.0),
                activation: Activation::Identity,
            }],
        )
        .unwrap()
    }

    #[test]
    fn kernel_weight_examples() {
        assert!((kernel_weight(6, 1) - 1.0 / 6.0).abs() < 1e-15);
        assert!((kernel_weight(6, 5) - 1.0 / 6.0).abs() < 1e-15);
        // 5 / (20 * 3 * 3)
        assert!((kernel_weight(6, 3) - 5.0 / 180.0).abs() < 1e-15);
    }

    #[test]
    fn full_enumeration_recovers_shapley() {
        for d in [2usize, 4, 7, 10] {
            let t = tanh_model(d, d as u64);
            let g = GroupMap::unnamed(d);
            let x: Vec<f64> = (0..d).map(|j| 1.5 * ((j * 3) as f64).cos()).collect();
            let vf = ValueFunction::new(&t, &g, x, vec![0.0; d]).unwrap();
            let exact = exact_shapley(&vf).unwrap();
            let ks = kernel_shap_enumerated(&vf).unwrap();
            for (a, b) in exact.phi.iter().zip(&ks.phi) {
                assert!((a - b).abs() < 1e-6, "M = {d}: {a} vs {b}");
            }
            let all_pairs = draw_pairs(d, usize::MAX, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
            assert_eq!(all_pairs.len() as u64, proper_count(d) / 2);
            let (phi, _, _) = ks_pair_with(&vf, &all_pairs).unwrap();
            for (a, b) in exact.phi.iter().zip(&phi) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn affine_model_is_recovered_exactly() {
        let w = [2.0, -1.0, 0.5, 3.0, 1.0, -2.5];
        let lin = linear(&w);
        let g = GroupMap::unnamed(6);
        let x = vec![1.0, 2.0, 3.0, -1.0, 0.5, 2.0];
        let vf = ValueFunction::new(&lin, &g, x.clone(), vec![0.25; 6]).unwrap();
        for seed in 0..5 {
            for est in [kernel_shap(&vf, 32, seed).unwrap(), ks_pair(&vf, 32, seed).unwrap()] {
                assert!(!est.regularized);
                for i in 0..6 {
                    assert!((est.phi[i] - w[i] * (x[i] - 0.25)).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn efficiency_and_accounting() {
        let t = tanh_model(6, 2);
        let g = GroupMap::unnamed(6);
        let vf = ValueFunction::new(&t, &g, vec![1.0, -2.0, 0.5, 0.1, 1.2, -0.3], vec![0.0; 6]).unwrap();
        let target = vf.eval(vf.full()).unwrap() - vf.eval(vf.empty()).unwrap();
        let a = kernel_shap(&vf, 20, 3).unwrap();
        assert!((a.sum() - target).abs() < 1e-10);
        assert_eq!(a.eval_count, 20);
        let b = ks_pair(&vf, 20, 3).unwrap();
        assert!((b.sum() - target).abs() < 1e-10);
        assert_eq!(b.eval_count, 20);
        assert_eq!(kernel_shap(&vf, 20, 3).unwrap(), a);
        assert!(kernel_shap(&vf, 7, 0).is_err());
        assert!(ks_pair(&vf, 21, 0).is_err());
    }

    #[test]
    fn drawn_pairs_are_complements() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pairs = draw_pairs(7, 20, &mut rng).unwrap();
        let u = Coalition::full(7);
        for (s, t) in pairs {
            assert_eq!(s.union(t), u);
            assert!(s.intersection(t).is_empty());
            assert!(!s.is_empty() && !t.is_empty());
        }
    }

    #[test]
    fn sampler_follows_kernel_mass() {
        // size 1 and size M-1 carry the most mass; the middle the least
        let sampler = KernelSampler::new(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut counts = [0usize; 8];
        for _ in 0..40_000 {
            counts[sampler.draw(&mut rng).len()] += 1;
        }
        let total: f64 = (1..8).map(|s| 1.0 / (s * (8 - s)) as f64).sum();
        for s in 1..8 {
            let expect = 40_000.0 / (s * (8 - s)) as f64 / total;
            assert!((counts[s] as f64 - expect).abs() < 5.0 * expect.sqrt(), "size {s}");
        }
        assert_eq!(counts[0] + counts.iter().skip(8).sum::<usize>(), 0);
    }

    #[test]
    fn singular_design_is_ridged() {
        let t = tanh_model(4, 0);
        let g = GroupMap::unnamed(4);
        let vf = ValueFunction::new(&t, &g, vec![1.0, 1.0, 1.0, 1.0], vec![0.0; 4]).unwrap();
        // only two coalitions for four unknowns
        let cs = [Coalition::from_bits(0b0011, 4).unwrap(), Coalition::from_bits(0b1100, 4).unwrap()];
        let (phi, regularized, calls) = kernel_shap_with(&vf, &cs).unwrap();
        assert!(regularized);
        assert_eq!(calls, 4);
        let target = vf.eval(vf.full()).unwrap() - vf.eval(vf.empty()).unwrap();
        assert!((phi.iter().sum::<f64>() - target).abs() < 1e-6);
    }
}

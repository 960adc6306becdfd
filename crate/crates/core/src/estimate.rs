//! One entry point for every method at a per-feature budget `N`, so that all
//! estimators spend the same `N * M` value-function calls.

use crate::attribution::{Attribution, Method};
use crate::baselines;
use crate::error::{Error, Result};
use crate::exact::exact_shapley;
use crate::rng;
use crate::shear::shear_explain;
use crate::value::ValueFunction;

/// Explains `vf` with `method` at per-feature budget `n`.
///
/// Permutation methods run `n / 2` orderings. Kernel methods repeat `M` independent
/// regressions of `n` calls each and average them. `n` is ignored for [`Method::Exact`].
pub fn explain(vf: &ValueFunction<'_>, method: Method, n: u64, seed: u64) -> Result<Attribution> {
    let m = vf.num_features();
    match method {
        Method::Exact => exact_shapley(vf),
        Method::Shear => shear_explain(vf, n, seed),
        Method::Permutation | Method::AntitheticPermutation => {
            if n < 2 || !n.is_multiple_of(2) {
                return Err(Error::Argument(format!("{method} needs an even budget N >= 2, got {n}")));
            }
            let mut out = if method == Method::Permutation {
                baselines::permutation_sampling(vf, n / 2, seed)?
            } else {
                baselines::antithetical_ps(vf, n / 2, seed)?
            };
            out.seed = Some(seed);
            Ok(out)
        }
        Method::KernelShap | Method::KsWelford | Method::KsPair => {
            let mut phi = vec![0.0; m];
            let mut calls = 0;
            let mut regularized = false;
            for rep in 0..m as u64 {
                let s = rng::mix(seed, rep);
                let a = match method {
                    Method::KernelShap => baselines::kernel_shap(vf, n, s)?,
                    Method::KsWelford => baselines::ks_welford(vf, n, s)?,
                    _ => baselines::ks_pair(vf, n, s)?,
                };
                phi.iter_mut().zip(&a.phi).for_each(|(p, v)| *p += v);
                calls += a.eval_count;
                regularized |= a.regularized;
            }
            phi.iter_mut().for_each(|p| *p /= m as f64);
            let mut out = Attribution::new(phi, method, n, Some(seed), calls);
            out.regularized = regularized;
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Activation, Head, LayerSpec, MlpModel};
    use crate::value::GroupMap;

    #[test]
    fn every_estimator_spends_n_times_m() {
        let arch = [LayerSpec::new(6, Activation::Tanh), LayerSpec::new(1, Activation::Identity)];
        let t = MlpModel::init(6, &arch, Head::Scalar, 1).unwrap();
        let g = GroupMap::unnamed(6);
        let vf = ValueFunction::new(&t, &g, vec![0.7; 6], vec![0.0; 6]).unwrap();
        for method in Method::ESTIMATORS {
            let a = explain(&vf, method, 16, 3).unwrap();
            assert_eq!(a.eval_count, 16 * 6, "{method}");
            assert_eq!(a.budget_n, 16);
            assert_eq!(a.method, method);
            assert_eq!(explain(&vf, method, 16, 3).unwrap(), a);
        }
        assert!(explain(&vf, Method::Permutation, 3, 0).is_err());
        assert!(explain(&vf, Method::AntitheticPermutation, 2, 0).is_err());
    }
}

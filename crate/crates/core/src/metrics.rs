//! Explanation quality metrics against ground truth (absolute error, ranking
//! accuracy) and under model perturbation (faithfulness, monotonicity).

use serde::{Deserialize, Serialize};

use crate::attribution::Method;
use crate::error::{Error, Result};
use crate::value::ValueFunction;

/// Metrics of one explanation. `None` marks a metric that was not requested or is
/// undefined for the instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub instance_id: usize,
    pub method: Method,
    pub budget_n: u64,
    pub ae: Option<f64>,
    pub acc: Option<f64>,
    pub faithfulness: Option<f64>,
    pub monotonicity: Option<f64>,
}

fn same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Argument(format!("length mismatch: {} vs {}", a.len(), b.len())));
    }
    Ok(())
}

/// Feature indices ordered by descending value; ties go to the smaller index.
pub fn ranking(phi: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..phi.len()).collect();
    order.sort_by(|&a, &b| phi[b].total_cmp(&phi[a]).then(a.cmp(&b)));
    order
}

/// `Σ |φ_i - φ̂_i|`.
pub fn abs_error(phi: &[f64], phi_hat: &[f64]) -> Result<f64> {
    same_len(phi, phi_hat)?;
    Ok(phi.iter().zip(phi_hat).map(|(a, b)| (a - b).abs()).sum())
}

/// Rank agreement with position `m` (1-based) weighted by `1/m`, normalised to `[0, 1]`.
pub fn rank_accuracy(phi: &[f64], phi_hat: &[f64]) -> Result<f64> {
    same_len(phi, phi_hat)?;
    if phi.is_empty() {
        return Err(Error::Argument("rank accuracy of an empty vector".into()));
    }
    let (r, r_hat) = (ranking(phi), ranking(phi_hat));
    let mut hit = 0.0;
    let mut norm = 0.0;
    for (m, (a, b)) in r.iter().zip(&r_hat).enumerate() {
        let w = 1.0 / (m + 1) as f64;
        norm += w;
        if a == b {
            hit += w;
        }
    }
    Ok(hit / norm)
}

/// Pearson correlation with population moments, clamped to `[-1, 1]`.
///
/// `Ok(None)` when either input is constant.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<Option<f64>> {
    same_len(xs, ys)?;
    if xs.len() < 2 {
        return Err(Error::Argument("pearson needs at least two points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    let r = (sxy / n) / ((sxx / n).sqrt() * (syy / n).sqrt());
    Ok(Some(r.clamp(-1.0, 1.0)))
}

/// Leave-one-out drops `f_v(U) - f_v(U \ {i})`.
pub fn preceding_differences(vf: &ValueFunction<'_>) -> Result<Vec<f64>> {
    let full = vf.full();
    let top = vf.eval(full)?;
    (0..vf.num_features()).map(|i| Ok(top - vf.eval(full.without(i))?)).collect()
}

/// Pearson between the leave-one-out drops and `φ̂`.
pub fn faithfulness(vf: &ValueFunction<'_>, phi_hat: &[f64]) -> Result<Option<f64>> {
    if vf.num_features() < 2 {
        return Err(Error::Argument("faithfulness needs M >= 2".into()));
    }
    same_len(&vec![0.0; vf.num_features()], phi_hat)?;
    pearson(&preceding_differences(vf)?, phi_hat)
}

/// Marginal gains `δ_k = f_v(W_k ∪ {r_k}) - f_v(W_k)` along the `φ̂` ranking, where
/// `W_k` holds the `k` features ranked above `r_k` (empty for `k = 0`).
pub fn prefix_gains(vf: &ValueFunction<'_>, phi_hat: &[f64]) -> Result<Vec<f64>> {
    same_len(&vec![0.0; vf.num_features()], phi_hat)?;
    let mut prefix = vf.empty();
    let mut prev = vf.eval(prefix)?;
    let mut gains = Vec::with_capacity(phi_hat.len());
    for i in ranking(phi_hat) {
        prefix = prefix.with(i);
        let next = vf.eval(prefix)?;
        gains.push(next - prev);
        prev = next;
    }
    Ok(gains)
}

/// Fraction of adjacent ranked features whose gains are non-increasing.
pub fn monotonicity(vf: &ValueFunction<'_>, phi_hat: &[f64]) -> Result<f64> {
    let m = vf.num_features();
    if m < 2 {
        return Err(Error::Argument("monotonicity needs M >= 2".into()));
    }
    let gains = prefix_gains(vf, phi_hat)?;
    Ok(monotonicity_of_gains(&gains))
}

/// Monotonicity from precomputed gains.
pub fn monotonicity_of_gains(gains: &[f64]) -> f64 {
    let ordered = gains.windows(2).filter(|w| w[0] >= w[1]).count();
    ordered as f64 / (gains.len() - 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Activation, Head, Layer, MlpModel};
    use crate::value::GroupMap;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn additive(w: &[f64]) -> (MlpModel, GroupMap) {
        let layer = Layer {
            weight: DMatrix::from_row_slice(1, w.len(), w),
            bias: DVector::zeros(1),
            activation: Activation::Identity,
        };
        (MlpModel::new(w.len(), Head::Scalar, vec![layer]).unwrap(), GroupMap::unnamed(w.len()))
    }

    #[test]
    fn abs_error_examples() {
        assert_eq!(abs_error(&[1.0, 2.0], &[1.5, 1.5]).unwrap(), 1.0);
        assert_eq!(abs_error(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(abs_error(&[0.0, 0.0], &[-1.0, 1.0]).unwrap(), 2.0);
        assert!(abs_error(&[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn rank_accuracy_examples() {
        assert_eq!(rank_accuracy(&[3.0, 1.0, 2.0, 0.0], &[30.0, 10.0, 20.0, 0.0]).unwrap(), 1.0);
        assert_eq!(rank_accuracy(&[1.0, 2.0], &[2.0, 1.0]).unwrap(), 0.0);
        // rankings (0,1,2) and (0,2,1): only the top position agrees
        let acc = rank_accuracy(&[3.0, 2.0, 1.0], &[3.0, 1.0, 2.0]).unwrap();
        assert!((acc - 6.0 / 11.0).abs() < 1e-15);
        assert!(rank_accuracy(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn ties_go_to_smaller_index() {
        assert_eq!(ranking(&[1.0, 2.0, 2.0, 0.0]), vec![1, 2, 0, 3]);
        assert_eq!(rank_accuracy(&[1.0, 1.0], &[5.0, 5.0]).unwrap(), 1.0);
    }

    #[test]
    fn pearson_examples() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap().unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap().unwrap() + 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.000001]).unwrap().unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap(), None);
        assert!(pearson(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn faithfulness_examples() {
        let (lin, g) = additive(&[1.0, 2.0, 3.0]);
        let vf = ValueFunction::new(&lin, &g, vec![1.0; 3], vec![0.0; 3]).unwrap();
        let diffs = preceding_differences(&vf).unwrap();
        assert_eq!(diffs, vec![1.0, 2.0, 3.0]);
        assert!((faithfulness(&vf, &diffs).unwrap().unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = diffs.iter().map(|d| -d).collect();
        assert!((faithfulness(&vf, &neg).unwrap().unwrap() + 1.0).abs() < 1e-15);
        assert!((faithfulness(&vf, &[2.0, 4.0, 6.0]).unwrap().unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(faithfulness(&vf, &[1.0, 1.0, 1.0]).unwrap(), None);
    }

    #[test]
    fn monotonicity_examples() {
        let w = [0.5, 3.0, -1.0, 2.0];
        let (lin, g) = additive(&w);
        let vf = ValueFunction::new(&lin, &g, vec![1.0; 4], vec![0.0; 4]).unwrap();
        assert_eq!(monotonicity(&vf, &w).unwrap(), 1.0);
        assert_eq!(prefix_gains(&vf, &w).unwrap(), vec![3.0, 2.0, 0.5, -1.0]);
        let reversed: Vec<f64> = w.iter().map(|v| -v).collect();
        assert_eq!(monotonicity(&vf, &reversed).unwrap(), 0.0);
        assert_eq!(monotonicity_of_gains(&[1.0, 2.0, 3.0]), 0.0);
        let (two, g2) = additive(&[1.0, 2.0]);
        let vf2 = ValueFunction::new(&two, &g2, vec![1.0; 2], vec![0.0; 2]).unwrap();
        assert_eq!(monotonicity(&vf2, &[1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(monotonicity(&vf2, &[2.0, 1.0]).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn rank_accuracy_ignores_monotone_transforms(
            a in prop::collection::vec(-5.0f64..5.0, 2..10),
            seed in 0u64..1000,
        ) {
            let b: Vec<f64> = a.iter().enumerate().map(|(i, v)| v + ((i as u64 * 7 + seed) % 5) as f64 * 0.3).collect();
            let f = |v: &f64| v.powi(3) + 2.0 * v;
            let (fa, fb): (Vec<f64>, Vec<f64>) = (a.iter().map(f).collect(), b.iter().map(f).collect());
            prop_assert_eq!(rank_accuracy(&a, &b).unwrap(), rank_accuracy(&fa, &fb).unwrap());
        }

        #[test]
        fn pearson_is_affine_invariant(
            xs in prop::collection::vec(-5.0f64..5.0, 3..12),
            scale in 0.1f64..10.0,
            shift in -10.0f64..10.0,
        ) {
            let ys: Vec<f64> = xs.iter().enumerate().map(|(i, v)| v * v + i as f64).collect();
            let zs: Vec<f64> = ys.iter().map(|y| scale * y + shift).collect();
            if let (Some(a), Some(b)) = (pearson(&xs, &ys).unwrap(), pearson(&xs, &zs).unwrap()) {
                prop_assert!((a - b).abs() < 1e-9);
                prop_assert!((-1.0..=1.0).contains(&a));
            }
        }

        #[test]
        fn abs_error_zero_iff_equal(a in prop::collection::vec(-5.0f64..5.0, 1..10), k in 0usize..10, d in -1.0f64..1.0) {
            prop_assert_eq!(abs_error(&a, &a).unwrap(), 0.0);
            let mut b = a.clone();
            let k = k % a.len();
            b[k] += d;
            prop_assert_eq!(abs_error(&a, &b).unwrap() == 0.0, a == b);
        }
    }
}

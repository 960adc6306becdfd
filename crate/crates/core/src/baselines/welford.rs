use nalgebra::{DMatrix, DVector};

use super::kernel::{constrained_from_normal, draw_coalitions, kernel_weight};
use crate::attribution::{Attribution, Method};
use crate::coalition::Coalition;
use crate::error::{Error, Result};
use crate::rng;
use crate::value::{CountingEval, ValueFunction};

/// Running weighted means of `1_S 1_Sᵀ` and `f_v(S) 1_S` over kernel-weighted samples.
#[derive(Debug, Clone)]
pub struct WelfordRegression {
    a: DMatrix<f64>,
    b: DVector<f64>,
    weight_sum: f64,
    samples: usize,
}

impl WelfordRegression {
    pub fn new(m: usize) -> Self {
        Self { a: DMatrix::zeros(m, m), b: DVector::zeros(m), weight_sum: 0.0, samples: 0 }
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn mean_design(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn mean_target(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn push(&mut self, s: Coalition, weight: f64, value: f64) {
        self.samples += 1;
        self.weight_sum += weight;
        let r = weight / self.weight_sum;
        let m = self.a.nrows();
        for p in 0..m {
            let zp = if s.contains(p) { 1.0 } else { 0.0 };
            self.b[p] += r * (value * zp - self.b[p]);
            for q in 0..m {
                let zq = if s.contains(q) { 1.0 } else { 0.0 };
                self.a[(p, q)] += r * (zp * zq - self.a[(p, q)]);
            }
        }
    }

    /// Attributions summing to `total`; errors until at least `M` samples are in.
    pub fn solve(&self, total: f64) -> Result<(Vec<f64>, bool)> {
        let m = self.a.nrows();
        if self.samples < m {
            return Err(Error::NotIdentifiable { samples: self.samples, m });
        }
        constrained_from_normal(self.a.clone(), self.b.clone(), total)
    }
}

/// Welford-updated Kernel SHAP on an explicit list of proper coalitions.
pub fn ks_welford_with(vf: &ValueFunction<'_>, coalitions: &[Coalition]) -> Result<(Vec<f64>, bool, u64)> {
    let m = vf.num_features();
    let eval = CountingEval::new(vf);
    let v0 = eval.eval(vf.empty())?;
    let v1 = eval.eval(vf.full())?;
    let mut reg = WelfordRegression::new(m);
    for &s in coalitions {
        if s.is_empty() || s.len() == m {
            return Err(Error::Argument(format!("coalition {s:?} is not proper")));
        }
        reg.push(s, kernel_weight(m, s.len()), eval.eval(s)?);
    }
    let (phi, regularized) = reg.solve(v1 - v0)?;
    Ok((phi, regularized, eval.calls()))
}

/// Kernel SHAP with sequentially updated sufficient statistics; same sampling and
/// budget accounting as [`super::kernel_shap`].
pub fn ks_welford(vf: &ValueFunction<'_>, budget: u64, seed: u64) -> Result<Attribution> {
    let m = vf.num_features();
    if m < 2 {
        return Err(Error::Argument("kernel estimators need M >= 2".into()));
    }
    if budget < 2 {
        return Err(Error::Argument(format!("kernel budget {budget} is below 2")));
    }
    let mut rng = rng::stream(seed, 0);
    let coalitions = draw_coalitions(m, (budget - 2) as usize, &mut rng)?;
    let (phi, regularized, calls) = ks_welford_with(vf, &coalitions)?;
    let mut out = Attribution::new(phi, Method::KsWelford, budget, Some(seed), calls);
    out.regularized = regularized;
    Ok(out)
}

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{check_input, Model};
use crate::error::{Error, Result};

/// `f(x) = xᵀAx + bᵀx + c`.
///
/// Its third derivatives vanish, so second-order Shapley error terms are exact
/// for it; the bound and chain-rule checks use it as their reference game.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticModel {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: f64,
}

impl QuadraticModel {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: f64) -> Result<Self> {
        let d = b.len();
        if d == 0 || a.shape() != (d, d) {
            return Err(Error::Validation(format!(
                "quadratic form: A is {:?}, b has length {d}",
                a.shape()
            )));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) || !c.is_finite() {
            return Err(Error::Validation("quadratic form: non-finite coefficient".into()));
        }
        Ok(Self { a, b, c })
    }

    /// `f(x) = x_i * x_j` over `d` inputs.
    pub fn product(d: usize, i: usize, j: usize) -> Self {
        let mut a = DMatrix::zeros(d, d);
        a[(i, j)] = 1.0;
        Self { a, b: DVector::zeros(d), c: 0.0 }
    }

    /// Coefficients uniform in `[-1, 1)`.
    pub fn random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        let mut a = DMatrix::zeros(d, d);
        for r in 0..d {
            for c in 0..d {
                a[(r, c)] = rng.gen_range(-1.0..1.0);
            }
        }
        let b = DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
        let c = rng.gen_range(-1.0..1.0);
        Self { a, b, c }
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }
}

impl Model for QuadraticModel {
    fn input_dim(&self) -> usize {
        self.b.len()
    }

    fn forward(&self, input: &[f64]) -> Result<f64> {
        check_input(self.b.len(), input)?;
        let x = DVector::from_column_slice(input);
        Ok(x.dot(&(&self.a * &x)) + self.b.dot(&x) + self.c)
    }

    fn input_gradient(&self, input: &[f64]) -> Result<Vec<f64>> {
        check_input(self.b.len(), input)?;
        let x = DVector::from_column_slice(input);
        let g = &self.a * &x + self.a.tr_mul(&x) + &self.b;
        Ok(g.iter().copied().collect())
    }

    fn input_cross_hessian(&self, input: &[f64]) -> Result<DMatrix<f64>> {
        check_input(self.b.len(), input)?;
        let d = self.b.len();
        Ok(DMatrix::from_fn(d, d, |i, j| {
            let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
            self.a[(lo, hi)] + self.a[(hi, lo)]
        }))
    }
}

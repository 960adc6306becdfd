//! Differentiable scalar models: the explained function `f`.

mod io;
mod mlp;
mod quadratic;
mod train;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub use io::{load_model, model_from_json, model_to_json, save_model};
pub use mlp::{Activation, Head, Layer, LayerSpec, MlpModel};
pub use quadratic::QuadraticModel;
pub use train::{accuracy, train, LabeledData, Loss, TrainConfig};

/// A scalar-valued model with analytic first and second input derivatives.
///
/// Implementations are immutable once built and may be shared across threads.
pub trait Model: Send + Sync {
    fn input_dim(&self) -> usize;

    fn forward(&self, input: &[f64]) -> Result<f64>;

    fn input_gradient(&self, input: &[f64]) -> Result<Vec<f64>>;

    /// `H[i][j] = d²f / dx_i dx_j`, exactly symmetric.
    fn input_cross_hessian(&self, input: &[f64]) -> Result<DMatrix<f64>>;
}

/// Any model the file loader understands.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel {
    Mlp(MlpModel),
    Quadratic(QuadraticModel),
}

impl Model for AnyModel {
    fn input_dim(&self) -> usize {
        match self {
            AnyModel::Mlp(m) => m.input_dim(),
            AnyModel::Quadratic(m) => m.input_dim(),
        }
    }

    fn forward(&self, input: &[f64]) -> Result<f64> {
        match self {
            AnyModel::Mlp(m) => m.forward(input),
            AnyModel::Quadratic(m) => m.forward(input),
        }
    }

    fn input_gradient(&self, input: &[f64]) -> Result<Vec<f64>> {
        match self {
            AnyModel::Mlp(m) => m.input_gradient(input),
            AnyModel::Quadratic(m) => m.input_gradient(input),
        }
    }

    fn input_cross_hessian(&self, input: &[f64]) -> Result<DMatrix<f64>> {
        match self {
            AnyModel::Mlp(m) => m.input_cross_hessian(input),
            AnyModel::Quadratic(m) => m.input_cross_hessian(input),
        }
    }
}

impl From<MlpModel> for AnyModel {
    fn from(m: MlpModel) -> Self {
        AnyModel::Mlp(m)
    }
}

impl From<QuadraticModel> for AnyModel {
    fn from(m: QuadraticModel) -> Self {
        AnyModel::Quadratic(m)
    }
}

pub(crate) fn check_input(input_dim: usize, input: &[f64]) -> Result<()> {
    if input.len() != input_dim {
        return Err(Error::Config(format!(
            "input has {} columns, model expects {input_dim}",
            input.len()
        )));
    }
    if let Some(j) = input.iter().position(|v| !v.is_finite()) {
        return Err(Error::Input(format!("input column {j} is not finite")));
    }
    Ok(())
}

/// Central finite differences of `forward`. Test oracle only.
pub fn finite_difference_gradient<M: Model + ?Sized>(
    model: &M,
    input: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    let mut x = input.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for j in 0..x.len() {
        let orig = x[j];
        x[j] = orig + h;
        let up = model.forward(&x)?;
        x[j] = orig - h;
        let down = model.forward(&x)?;
        x[j] = orig;
        out.push((up - down) / (2.0 * h));
    }
    Ok(out)
}

/// Central finite differences of `input_gradient`. Test oracle only.
pub fn finite_difference_hessian<M: Model + ?Sized>(
    model: &M,
    input: &[f64],
    h: f64,
) -> Result<DMatrix<f64>> {
    let d = input.len();
    let mut x = input.to_vec();
    let mut out = DMatrix::zeros(d, d);
    for j in 0..d {
        let orig = x[j];
        x[j] = orig + h;
        let up = model.input_gradient(&x)?;
        x[j] = orig - h;
        let down = model.input_gradient(&x)?;
        x[j] = orig;
        for i in 0..d {
            out[(i, j)] = (up[i] - down[i]) / (2.0 * h);
        }
    }
    Ok(out)
}

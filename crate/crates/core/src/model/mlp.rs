use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_input, Model};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => sigmoid(z),
        }
    }

    /// `(σ(z), σ'(z), σ''(z))`. Relu uses `σ'(0) = 0` and `σ'' = 0` everywhere.
    #[inline]
    pub fn derivatives(self, z: f64) -> (f64, f64, f64) {
        match self {
            Activation::Identity => (z, 1.0, 0.0),
            Activation::Relu => {
                if z > 0.0 {
                    (z, 1.0, 0.0)
                } else {
                    (0.0, 0.0, 0.0)
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                let d1 = 1.0 - t * t;
                (t, d1, -2.0 * t * d1)
            }
            Activation::Sigmoid => {
                let s = sigmoid(z);
                let d1 = s * (1.0 - s);
                (s, d1, d1 * (1.0 - 2.0 * s))
            }
        }
    }

    fn has_curvature(self) -> bool {
        matches!(self, Activation::Tanh | Activation::Sigmoid)
    }
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// How the final layer's output is reduced to the explained scalar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    /// Output dimension 1, value is the single output.
    Scalar,
    /// Output dimension 2, value is `output[1] - output[0]`.
    LogitDiff,
}

impl Head {
    pub fn output_dim(self) -> usize {
        match self {
            Head::Scalar => 1,
            Head::LogitDiff => 2,
        }
    }

    fn reduce(self, out: &DVector<f64>) -> f64 {
        match self {
            Head::Scalar => out[0],
            Head::LogitDiff => out[1] - out[0],
        }
    }

    /// d(value)/d(output).
    pub(crate) fn seed(self) -> DVector<f64> {
        match self {
            Head::Scalar => DVector::from_element(1, 1.0),
            Head::LogitDiff => DVector::from_vec(vec![-1.0, 1.0]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `D_out x D_in`; row `i` holds the weights into output unit `i`.
    pub weight: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub activation: Activation,
}

/// Width and activation of one dense layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub width: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(width: usize, activation: Activation) -> Self {
        Self { width, activation }
    }
}

/// Feed-forward network with a scalar value head.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    input_dim: usize,
    head: Head,
    layers: Vec<Layer>,
}

impl MlpModel {
    pub fn new(input_dim: usize, head: Head, layers: Vec<Layer>) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::Validation("input_dim must be positive".into()));
        }
        if layers.is_empty() {
            return Err(Error::Validation("model has no layers".into()));
        }
        let mut fan_in = input_dim;
        for (k, layer) in layers.iter().enumerate() {
            let (rows, cols) = layer.weight.shape();
            if cols != fan_in {
                return Err(Error::Validation(format!(
                    "layer {k}: weight has {cols} columns, previous layer emits {fan_in}"
                )));
            }
            if rows == 0 {
                return Err(Error::Validation(format!("layer {k}: zero output units")));
            }
            if layer.bias.len() != rows {
                return Err(Error::Validation(format!(
                    "layer {k}: bias length {} does not match {rows} weight rows",
                    layer.bias.len()
                )));
            }
            if layer.weight.iter().chain(layer.bias.iter()).any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!("layer {k}: non-finite parameter")));
            }
            fan_in = rows;
        }
        if fan_in != head.output_dim() {
            return Err(Error::Validation(format!(
                "head {head:?} needs final output dimension {}, got {fan_in}",
                head.output_dim()
            )));
        }
        Ok(Self { input_dim, head, layers })
    }

    /// Uniform `(-1/sqrt(D_in), 1/sqrt(D_in))` initialisation from a seeded stream.
    pub fn init(input_dim: usize, arch: &[LayerSpec], head: Head, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::init_with(input_dim, arch, head, &mut rng)
    }

    pub fn init_with<R: Rng + ?Sized>(
        input_dim: usize,
        arch: &[LayerSpec],
        head: Head,
        rng: &mut R,
    ) -> Result<Self> {
        let mut fan_in = input_dim;
        let mut layers = Vec::with_capacity(arch.len());
        for spec in arch {
            let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
            // row-major draw order so the stream layout is independent of storage order
            let mut w = DMatrix::zeros(spec.width, fan_in);
            for r in 0..spec.width {
                for c in 0..fan_in {
                    w[(r, c)] = rng.gen_range(-bound..bound);
                }
            }
            let b = DVector::from_fn(spec.width, |_, _| rng.gen_range(-bound..bound));
            layers.push(Layer { weight: w, bias: b, activation: spec.activation });
            fan_in = spec.width;
        }
        Self::new(input_dim, head, layers)
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub(crate) fn forward_unchecked(&self, input: &[f64]) -> f64 {
        let mut a = DVector::from_column_slice(input);
        for layer in &self.layers {
            let mut z = &layer.weight * &a + &layer.bias;
            z.apply(|v| *v = layer.activation.apply(*v));
            a = z;
        }
        self.head.reduce(&a)
    }
}

impl Model for MlpModel {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn forward(&self, input: &[f64]) -> Result<f64> {
        check_input(self.input_dim, input)?;
        Ok(self.forward_unchecked(input))
    }

    fn input_gradient(&self, input: &[f64]) -> Result<Vec<f64>> {
        check_input(self.input_dim, input)?;
        let mut a = DVector::from_column_slice(input);
        let mut slopes = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let z = &layer.weight * &a + &layer.bias;
            let act = layer.activation;
            slopes.push(z.map(|v| act.derivatives(v).1));
            a = z.map(|v| act.apply(v));
        }
        let mut g = self.head.seed();
        for (layer, d1) in self.layers.iter().zip(&slopes).rev() {
            let delta = g.component_mul(d1);
            g = layer.weight.tr_mul(&delta);
        }
        Ok(g.iter().copied().collect())
    }

    /// Forward Jacobian sweep followed by a reverse adjoint sweep.
    ///
    /// With `P_k = dz_k/dx` and `g_k = df/da_k`, the Hessian is
    /// `sum_k P_kᵀ diag(g_k ⊙ σ_k''(z_k)) P_k`; affine maps add no curvature.
    fn input_cross_hessian(&self, input: &[f64]) -> Result<DMatrix<f64>> {
        check_input(self.input_dim, input)?;
        let d = self.input_dim;
        let mut a = DVector::from_column_slice(input);
        let mut jac = DMatrix::<f64>::identity(d, d);
        let mut pre_jacs = Vec::with_capacity(self.layers.len());
        let mut slopes = Vec::with_capacity(self.layers.len());
        let mut curvatures = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let z = &layer.weight * &a + &layer.bias;
            let p = &layer.weight * &jac;
            let n = z.len();
            let mut act = DVector::zeros(n);
            let mut d1 = DVector::zeros(n);
            let mut d2 = DVector::zeros(n);
            for u in 0..n {
                let (s, ds, dds) = layer.activation.derivatives(z[u]);
                act[u] = s;
                d1[u] = ds;
                d2[u] = dds;
            }
            let mut next_jac = p.clone();
            for (u, mut row) in next_jac.row_iter_mut().enumerate() {
                row *= d1[u];
            }
            jac = next_jac;
            a = act;
            pre_jacs.push(p);
            slopes.push(d1);
            curvatures.push(d2);
        }

        let mut hess = DMatrix::<f64>::zeros(d, d);
        let mut g = self.head.seed();
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            if layer.activation.has_curvature() {
                let p = &pre_jacs[k];
                let c = g.component_mul(&curvatures[k]);
                // upper triangle only, mirrored below, so H is bitwise symmetric
                for i in 0..d {
                    for j in i..d {
                        let mut acc = 0.0;
                        for u in 0..c.len() {
                            acc += p[(u, i)] * c[u] * p[(u, j)];
                        }
                        hess[(i, j)] += acc;
                    }
                }
            }
            let delta = g.component_mul(&slopes[k]);
            g = layer.weight.tr_mul(&delta);
        }
        for i in 0..d {
            for j in 0..i {
                hess[(i, j)] = hess[(j, i)];
            }
        }
        Ok(hess)
    }
}

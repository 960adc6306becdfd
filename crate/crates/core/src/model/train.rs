//! Minimal mini-batch Adam trainer for [`MlpModel`].

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mlp::sigmoid;
use super::{Head, LayerSpec, MlpModel, Model};
use crate::error::{Error, Result};
use crate::rng::mix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// Binary cross-entropy on `sigmoid(f(x))`; labels must be 0 or 1.
    CrossEntropy,
    /// `(f(x) - y)² / 2`.
    SquaredError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub loss: Loss,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-3, epochs: 50, batch_size: 256, seed: 0, loss: Loss::CrossEntropy }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Argument(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Argument("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Argument("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Row-major inputs with one target per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledData {
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
}

impl LabeledData {
    pub fn new(inputs: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::Input("dataset is empty".into()));
        }
        if inputs.len() != labels.len() {
            return Err(Error::Input(format!(
                "{} rows but {} labels",
                inputs.len(),
                labels.len()
            )));
        }
        let width = inputs[0].len();
        for (r, row) in inputs.iter().enumerate() {
            if row.len() != width {
                return Err(Error::Input(format!("row {r} has {} columns, expected {width}", row.len())));
            }
            if row.iter().any(|v| !v.is_finite()) || !labels[r].is_finite() {
                return Err(Error::Input(format!("row {r} has a non-finite value")));
            }
        }
        Ok(Self { inputs, labels })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn width(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }
}

struct Adam {
    m: Vec<(DMatrix<f64>, DVector<f64>)>,
    v: Vec<(DMatrix<f64>, DVector<f64>)>,
    t: i32,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

impl Adam {
    fn new(model: &MlpModel) -> Self {
        let zeros: Vec<_> = model
            .layers()
            .iter()
            .map(|l| (DMatrix::zeros(l.weight.nrows(), l.weight.ncols()), DVector::zeros(l.bias.len())))
            .collect();
        Self { m: zeros.clone(), v: zeros, t: 0 }
    }

    fn step(&mut self, model: &mut MlpModel, grads: &[(DMatrix<f64>, DVector<f64>)], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - BETA1.powi(self.t);
        let c2 = 1.0 - BETA2.powi(self.t);
        for (k, layer) in model.layers_mut().iter_mut().enumerate() {
            let (gw, gb) = &grads[k];
            let (mw, mb) = &mut self.m[k];
            let (vw, vb) = &mut self.v[k];
            update(layer.weight.as_mut_slice(), gw.as_slice(), mw.as_mut_slice(), vw.as_mut_slice(), lr, c1, c2);
            update(layer.bias.as_mut_slice(), gb.as_slice(), mb.as_mut_slice(), vb.as_mut_slice(), lr, c1, c2);
        }
    }
}

fn update(p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64], lr: f64, c1: f64, c2: f64) {
    for i in 0..p.len() {
        m[i] = BETA1 * m[i] + (1.0 - BETA1) * g[i];
        v[i] = BETA2 * v[i] + (1.0 - BETA2) * g[i] * g[i];
        p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + EPS);
    }
}

/// Trains a fresh network. Two calls with the same seed produce bit-identical weights.
pub fn train(data: &LabeledData, arch: &[LayerSpec], head: Head, cfg: &TrainConfig) -> Result<MlpModel> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Input("dataset is empty".into()));
    }
    if arch.last().map(|l| l.width) != Some(head.output_dim()) {
        return Err(Error::Config(format!(
            "architecture must end in {} unit(s) for head {head:?}",
            head.output_dim()
        )));
    }
    if cfg.loss == Loss::CrossEntropy && data.labels.iter().any(|&y| y != 0.0 && y != 1.0) {
        return Err(Error::Input("cross_entropy needs labels in {0, 1}".into()));
    }

    let mut model = MlpModel::init(data.width(), arch, head, cfg.seed)?;
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(mix(cfg.seed, 0x0005_eed5_u64));
    let mut adam = Adam::new(&model);
    let mut order: Vec<usize> = (0..data.len()).collect();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut grads: Vec<_> = model
                .layers()
                .iter()
                .map(|l| (DMatrix::zeros(l.weight.nrows(), l.weight.ncols()), DVector::zeros(l.bias.len())))
                .collect();
            for &r in batch {
                epoch_loss += accumulate(&model, &data.inputs[r], data.labels[r], cfg.loss, &mut grads);
            }
            let scale = 1.0 / batch.len() as f64;
            for (gw, gb) in &mut grads {
                *gw *= scale;
                *gb *= scale;
            }
            adam.step(&mut model, &grads, cfg.learning_rate);
        }
        let mean = epoch_loss / data.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Divergence { epoch, loss: mean });
        }
    }
    // re-run validation: Adam must not have produced non-finite weights
    let layers = model.layers().to_vec();
    MlpModel::new(model.input_dim(), head, layers)
}

/// Adds one sample's parameter gradient into `grads`; returns the sample loss.
fn accumulate(
    model: &MlpModel,
    x: &[f64],
    y: f64,
    loss: Loss,
    grads: &mut [(DMatrix<f64>, DVector<f64>)],
) -> f64 {
    let layers = model.layers();
    let mut acts = Vec::with_capacity(layers.len() + 1);
    let mut slopes = Vec::with_capacity(layers.len());
    acts.push(DVector::from_column_slice(x));
    for layer in layers {
        let z = &layer.weight * acts.last().unwrap() + &layer.bias;
        let act = layer.activation;
        slopes.push(z.map(|v| act.derivatives(v).1));
        acts.push(z.map(|v| act.apply(v)));
    }
    let out = acts.last().unwrap();
    let f = match model.head() {
        Head::Scalar => out[0],
        Head::LogitDiff => out[1] - out[0],
    };
    let (value, dloss) = match loss {
        Loss::CrossEntropy => {
            // log(1 + e^{-f}) for y = 1, log(1 + e^{f}) for y = 0, computed stably
            let s = if y == 1.0 { -f } else { f };
            let l = s.max(0.0) + (-s.abs()).exp().ln_1p();
            (l, sigmoid(f) - y)
        }
        Loss::SquaredError => (0.5 * (f - y).powi(2), f - y),
    };
    let mut g = model.head().seed() * dloss;
    for k in (0..layers.len()).rev() {
        let delta = g.component_mul(&slopes[k]);
        let (gw, gb) = &mut grads[k];
        gw.ger(1.0, &delta, &acts[k], 1.0);
        *gb += &delta;
        g = layers[k].weight.tr_mul(&delta);
    }
    value
}

/// Fraction of rows where `f(x) > 0` agrees with a {0, 1} label.
pub fn accuracy<M: Model + ?Sized>(model: &M, data: &LabeledData) -> Result<f64> {
    let mut hits = 0usize;
    for (x, &y) in data.inputs.iter().zip(&data.labels) {
        let pred = if model.forward(x)? > 0.0 { 1.0 } else { 0.0 };
        if pred == y {
            hits += 1;
        }
    }
    Ok(hits as f64 / data.len() as f64)
}

//! Seeded synthetic datasets and models used as committed test inputs.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use shear_core::model::{
    save_model, train, Activation, AnyModel, Head, LabeledData, Layer, LayerSpec, Loss, MlpModel, Model,
    QuadraticModel, TrainConfig,
};
use shear_core::rng;
use shear_core::value::{GroupMap, RefPolicy};

use crate::data::{reference_for, write_json, Table};
use crate::error::{Error, Result};

pub const TRAIN_ROWS: usize = 400;
pub const TEST_ROWS: usize = 200;
pub const LABEL: &str = "label";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureKind {
    /// `w·x + b`: every Shapley estimator is exact.
    Affine,
    /// `xᵀAx + bᵀx + c` with entries in `[-1, 1)`.
    Quadratic,
    /// Two hidden tanh layers trained to separate a random tanh teacher.
    TanhMlp,
}

impl fmt::Display for FixtureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FixtureKind::Affine => "affine",
            FixtureKind::Quadratic => "quadratic",
            FixtureKind::TanhMlp => "tanh_mlp",
        })
    }
}

impl FromStr for FixtureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "affine" => Ok(FixtureKind::Affine),
            "quadratic" => Ok(FixtureKind::Quadratic),
            "tanh_mlp" => Ok(FixtureKind::TanhMlp),
            _ => Err(Error::Config(format!("unknown fixture kind {s:?}"))),
        }
    }
}

/// Paths written by [`make_fixture`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureFiles {
    pub train: PathBuf,
    pub test: PathBuf,
    pub model: PathBuf,
    pub groups: PathBuf,
    pub reference: PathBuf,
}

impl FixtureFiles {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            train: dir.join("train.csv"),
            test: dir.join("test.csv"),
            model: dir.join("model.json"),
            groups: dir.join("groups.json"),
            reference: dir.join("reference.json"),
        }
    }
}

fn uniform_rows<R: Rng>(rng: &mut R, n: usize, m: usize) -> Vec<Vec<f64>> {
    let half = 3f64.sqrt();
    (0..n).map(|_| (0..m).map(|_| rng.gen_range(-half..half)).collect()).collect()
}

/// Class of each row under a random tanh teacher, split at the median score of `train`.
fn teacher_labels(m: usize, seed: u64, train: &[Vec<f64>], test: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let arch = [LayerSpec::new(16, Activation::Tanh), LayerSpec::new(1, Activation::Identity)];
    let mut layers = MlpModel::init(m, &arch, Head::Scalar, rng::mix(seed, 1))?.layers().to_vec();
    for layer in &mut layers {
        layer.weight *= 3.0;
    }
    let teacher = MlpModel::new(m, Head::Scalar, layers)?;
    let score = |rows: &[Vec<f64>]| rows.iter().map(|r| teacher.forward(r)).collect::<shear_core::Result<Vec<f64>>>();
    let (train_scores, test_scores) = (score(train)?, score(test)?);
    let mut sorted = train_scores.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let classify = |s: Vec<f64>| s.into_iter().map(|v| if v > median { 1.0 } else { 0.0 }).collect();
    Ok((classify(train_scores), classify(test_scores)))
}

/// A fixture before it is written to disk.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub model: AnyModel,
    pub train: LabeledData,
    pub test: LabeledData,
}

/// Builds the model for `kind` and labels every row with the model output, or for
/// `tanh_mlp` with the teacher's class the model was trained on.
pub fn build(kind: FixtureKind, m: usize, seed: u64) -> Result<Fixture> {
    if !(2..=12).contains(&m) {
        return Err(Error::Config(format!("fixture feature count must be in 2..=12, got {m}")));
    }
    let mut rng = rng::stream(seed, 0);
    let train_rows = uniform_rows(&mut rng, TRAIN_ROWS, m);
    let test_rows = uniform_rows(&mut rng, TEST_ROWS, m);
    let model: AnyModel = match kind {
        FixtureKind::Affine => {
            let w: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let layer = Layer {
                weight: DMatrix::from_row_slice(1, m, &w),
                bias: DVector::from_element(1, rng.gen_range(-1.0..1.0)),
                activation: Activation::Identity,
            };
            MlpModel::new(m, Head::Scalar, vec![layer])?.into()
        }
        FixtureKind::Quadratic => QuadraticModel::random(m, &mut rng).into(),
        FixtureKind::TanhMlp => {
            let (train_y, test_y) = teacher_labels(m, seed, &train_rows, &test_rows)?;
            let train_data = LabeledData::new(train_rows, train_y)?;
            let student = [
                LayerSpec::new(32, Activation::Tanh),
                LayerSpec::new(32, Activation::Tanh),
                LayerSpec::new(1, Activation::Identity),
            ];
            let cfg = TrainConfig {
                learning_rate: 0.01,
                epochs: 60,
                batch_size: 32,
                seed: rng::mix(seed, 2),
                loss: Loss::CrossEntropy,
            };
            let model = train(&train_data, &student, Head::Scalar, &cfg)?;
            return Ok(Fixture { model: model.into(), train: train_data, test: LabeledData::new(test_rows, test_y)? });
        }
    };
    let outputs = |rows: &[Vec<f64>]| rows.iter().map(|r| model.forward(r)).collect::<shear_core::Result<Vec<f64>>>();
    let (train_y, test_y) = (outputs(&train_rows)?, outputs(&test_rows)?);
    Ok(Fixture { train: LabeledData::new(train_rows, train_y)?, test: LabeledData::new(test_rows, test_y)?, model })
}

fn labelled_table(columns: &[String], data: &LabeledData) -> Table {
    let rows = data
        .inputs
        .iter()
        .zip(&data.labels)
        .map(|(r, &y)| {
            let mut row = r.clone();
            row.push(y);
            row
        })
        .collect();
    Table { columns: columns.to_vec(), rows }
}

/// Writes `train.csv`, `test.csv`, `model.json`, `groups.json` and `reference.json` into `dir`.
pub fn make_fixture(kind: FixtureKind, m: usize, seed: u64, dir: &Path) -> Result<FixtureFiles> {
    let fixture = build(kind, m, seed)?;
    fs::create_dir_all(dir)?;
    let files = FixtureFiles::in_dir(dir);
    let groups = GroupMap::unnamed(m);
    let mut columns: Vec<String> = groups.names().map(str::to_string).collect();
    columns.push(LABEL.to_string());
    labelled_table(&columns, &fixture.train).write(&files.train)?;
    labelled_table(&columns, &fixture.test).write(&files.test)?;
    save_model(&fixture.model, &files.model)?;
    write_json(&groups, &files.groups)?;
    write_json(&reference_for(&fixture.train.inputs, &groups, RefPolicy::Mode)?, &files.reference)?;
    Ok(files)
}

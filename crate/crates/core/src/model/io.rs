//! JSON model files.
//!
//! MLP: `{"input_dim": int, "head": "scalar"|"logit_diff", "layers": [{"activation": str,
//! "weight": [[...]], "bias": [...]}]}` with output-indexed weight rows.
//! Quadratic form: `{"kind": "quadratic", "a": [[...]], "b": [...], "c": num}`.
//!
//! Floats are written in shortest round-trip form, so load(save(m)) == m exactly.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Activation, AnyModel, Head, Layer, MlpModel, QuadraticModel};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MlpFile {
    input_dim: usize,
    head: Head,
    layers: Vec<LayerFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerFile {
    activation: Activation,
    weight: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuadraticFile {
    kind: QuadraticTag,
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum QuadraticTag {
    Quadratic,
}

fn parse_error(e: serde_json::Error) -> Error {
    Error::Parse { location: format!("line {}, column {}", e.line(), e.column()), message: e.to_string() }
}

fn rows_to_matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some(r) = rows.iter().position(|row| row.len() != ncols) {
        return Err(Error::Validation(format!("{what}: row {r} has {} entries, expected {ncols}", rows[r].len())));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |r, c| rows[r][c]))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn model_from_json(text: &str) -> Result<AnyModel> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(parse_error)?;
    if value.get("kind").is_some() {
        let file: QuadraticFile = serde_json::from_str(text).map_err(parse_error)?;
        let a = rows_to_matrix(&file.a, "quadratic A")?;
        return Ok(QuadraticModel::new(a, DVector::from_vec(file.b), file.c)?.into());
    }
    let file: MlpFile = serde_json::from_str(text).map_err(parse_error)?;
    let mut layers = Vec::with_capacity(file.layers.len());
    for (k, l) in file.layers.into_iter().enumerate() {
        let weight = rows_to_matrix(&l.weight, &format!("layer {k} weight"))?;
        layers.push(Layer { weight, bias: DVector::from_vec(l.bias), activation: l.activation });
    }
    Ok(MlpModel::new(file.input_dim, file.head, layers)?.into())
}

pub fn model_to_json(model: &AnyModel) -> String {
    let mut text = match model {
        AnyModel::Mlp(m) => {
            let file = MlpFile {
                input_dim: crate::model::Model::input_dim(m),
                head: m.head(),
                layers: m
                    .layers()
                    .iter()
                    .map(|l| LayerFile {
                        activation: l.activation,
                        weight: matrix_to_rows(&l.weight),
                        bias: l.bias.iter().copied().collect(),
                    })
                    .collect(),
            };
            serde_json::to_string_pretty(&file)
        }
        AnyModel::Quadratic(q) => {
            let file = QuadraticFile {
                kind: QuadraticTag::Quadratic,
                a: matrix_to_rows(q.a()),
                b: q.b().iter().copied().collect(),
                c: q.c(),
            };
            serde_json::to_string_pretty(&file)
        }
    }
    .expect("finite floats always serialise");
    text.push('\n');
    text
}

pub fn load_model(path: impl AsRef<Path>) -> Result<AnyModel> {
    model_from_json(&fs::read_to_string(path)?)
}

pub fn save_model(model: &AnyModel, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, model_to_json(model))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LayerSpec, Model};
    use proptest::prelude::*;

    fn sample() -> AnyModel {
        let arch = [LayerSpec::new(3, Activation::Tanh), LayerSpec::new(2, Activation::Sigmoid)];
        MlpModel::init(4, &arch, Head::LogitDiff, 17).unwrap().into()
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.json");
        let p2 = dir.path().join("b.json");
        let m = sample();
        save_model(&m, &p1).unwrap();
        let loaded = load_model(&p1).unwrap();
        assert_eq!(loaded, m);
        save_model(&loaded, &p2).unwrap();
        assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
    }

    #[test]
    fn bias_length_mismatch_names_layer() {
        let text = r#"{"input_dim": 2, "head": "scalar", "layers": [
            {"activation": "tanh", "weight": [[1, 2], [3, 4]], "bias": [0, 0]},
            {"activation": "identity", "weight": [[1, 1]], "bias": [0, 1]}]}"#;
        match model_from_json(text) {
            Err(Error::Validation(msg)) => assert!(msg.contains("layer 1"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_activation_is_parse_error() {
        let text = r#"{"input_dim": 1, "head": "scalar", "layers": [
            {"activation": "swish", "weight": [[1]], "bias": [0]}]}"#;
        match model_from_json(text) {
            Err(Error::Parse { location, message }) => {
                assert!(location.starts_with("line 2"), "{location}");
                assert!(message.contains("swish"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn quadratic_round_trip() {
        let q: AnyModel = QuadraticModel::product(3, 0, 2).into();
        let back = model_from_json(&model_to_json(&q)).unwrap();
        assert_eq!(back, q);
        assert_eq!(back.forward(&[2.0, 9.0, 3.0]).unwrap(), 6.0);
    }

    proptest! {
        #[test]
        fn arbitrary_weights_round_trip(vals in proptest::collection::vec(-1e6f64..1e6, 6), bias in -1e-300f64..1e-300) {
            let layer = Layer {
                weight: DMatrix::from_row_slice(2, 3, &vals),
                bias: DVector::from_vec(vec![bias, vals[0] / 3.0]),
                activation: Activation::Identity,
            };
            let m: AnyModel = MlpModel::new(3, Head::LogitDiff, vec![layer]).unwrap().into();
            prop_assert_eq!(model_from_json(&model_to_json(&m)).unwrap(), m);
        }
    }
}

//! The marginal value function `f_v(S) = f(x_S, x̄_{U\S})` and its inputs.

use std::cell::Cell;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coalition::{Coalition, MAX_FEATURES};
use crate::error::{Error, Result};
use crate::model::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Continuous,
    Categorical,
}

/// One explained feature: a set of model input columns that flip together.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureGroup {
    pub name: String,
    pub columns: Vec<usize>,
    pub kind: FeatureKind,
}

/// Feature-to-column map, `{"features": [{"name", "columns", "kind"}]}` on disk.
///
/// Columns that belong to no feature are held at their reference value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupMap {
    pub features: Vec<FeatureGroup>,
}

impl GroupMap {
    /// One continuous feature per column.
    pub fn singletons<S: AsRef<str>>(names: &[S]) -> Self {
        let features = names
            .iter()
            .enumerate()
            .map(|(c, n)| FeatureGroup { name: n.as_ref().to_string(), columns: vec![c], kind: FeatureKind::Continuous })
            .collect();
        Self { features }
    }

    pub fn unnamed(input_dim: usize) -> Self {
        let names: Vec<String> = (0..input_dim).map(|c| format!("x{c}")).collect();
        Self::singletons(&names)
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }

    /// True when every feature is exactly one column.
    pub fn is_scalar(&self) -> bool {
        self.features.iter().all(|f| f.columns.len() == 1)
    }

    pub fn validate(&self, input_dim: usize) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::Config("group map has no features".into()));
        }
        if self.features.len() > MAX_FEATURES {
            return Err(Error::Config(format!(
                "{} features exceeds the {MAX_FEATURES}-feature cap",
                self.features.len()
            )));
        }
        let mut owner = vec![None::<usize>; input_dim];
        for (i, f) in self.features.iter().enumerate() {
            if f.columns.is_empty() {
                return Err(Error::Config(format!("feature '{}' has no columns", f.name)));
            }
            for &c in &f.columns {
                let slot = owner.get_mut(c).ok_or_else(|| {
                    Error::Config(format!("feature '{}' references column {c}, model has {input_dim}", f.name))
                })?;
                if let Some(prev) = *slot {
                    return Err(Error::Config(format!(
                        "column {c} belongs to both '{}' and '{}'",
                        self.features[prev].name, f.name
                    )));
                }
                *slot = Some(i);
            }
        }
        Ok(())
    }

    /// Column-wise reference policies: continuous columns use the mean,
    /// categorical columns use `categorical`.
    pub fn column_policies(&self, input_dim: usize, categorical: RefPolicy) -> Vec<RefPolicy> {
        let mut out = vec![RefPolicy::Mean; input_dim];
        for f in &self.features {
            if f.kind == FeatureKind::Categorical {
                for &c in &f.columns {
                    if c < input_dim {
                        out[c] = categorical;
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefPolicy {
    Mean,
    Mode,
}

/// Per-column baseline values that stand in for absent features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceVector {
    pub values: Vec<f64>,
    pub policy: Vec<RefPolicy>,
}

/// Mean columns take the arithmetic mean; mode columns the most frequent
/// value, ties going to the smallest value.
pub fn compute_reference(rows: &[Vec<f64>], policy: &[RefPolicy]) -> Result<ReferenceVector> {
    if rows.is_empty() {
        return Err(Error::Input("cannot compute references from an empty dataset".into()));
    }
    let width = policy.len();
    if let Some(r) = rows.iter().position(|row| row.len() != width) {
        return Err(Error::Input(format!("row {r} has {} columns, expected {width}", rows[r].len())));
    }
    let mut values = Vec::with_capacity(width);
    for (c, p) in policy.iter().enumerate() {
        let mut col: Vec<f64> = rows.iter().map(|r| r[c]).collect();
        if col.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input(format!("column {c} has a non-finite value")));
        }
        let v = match p {
            RefPolicy::Mean => col.iter().sum::<f64>() / col.len() as f64,
            RefPolicy::Mode => {
                col.sort_by(f64::total_cmp);
                let (mut best, mut best_run) = (col[0], 0usize);
                let mut k = 0;
                while k < col.len() {
                    let mut e = k;
                    while e < col.len() && col[e] == col[k] {
                        e += 1;
                    }
                    // strictly greater keeps the smallest value on ties
                    if e - k > best_run {
                        best = col[k];
                        best_run = e - k;
                    }
                    k = e;
                }
                best
            }
        };
        values.push(v);
    }
    Ok(ReferenceVector { values, policy: policy.to_vec() })
}

/// A model bound to one instance, its reference values and its feature groups.
#[derive(Clone)]
pub struct ValueFunction<'a> {
    model: &'a dyn Model,
    groups: &'a GroupMap,
    x: Vec<f64>,
    reference: Vec<f64>,
}

impl std::fmt::Debug for ValueFunction<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ValueFunction")
            .field("x", &self.x)
            .field("reference", &self.reference)
            .field("m", &self.num_features())
            .finish()
    }
}

impl<'a> ValueFunction<'a> {
    pub fn new(model: &'a dyn Model, groups: &'a GroupMap, x: Vec<f64>, reference: Vec<f64>) -> Result<Self> {
        let d = model.input_dim();
        if x.len() != d || reference.len() != d {
            return Err(Error::Config(format!(
                "instance has {} columns and reference {}, model expects {d}",
                x.len(),
                reference.len()
            )));
        }
        if x.iter().chain(&reference).any(|v| !v.is_finite()) {
            return Err(Error::Input("instance or reference is not finite".into()));
        }
        groups.validate(d)?;
        Ok(Self { model, groups, x, reference })
    }

    pub fn model(&self) -> &'a dyn Model {
        self.model
    }

    pub fn groups(&self) -> &'a GroupMap {
        self.groups
    }

    pub fn instance(&self) -> &[f64] {
        &self.x
    }

    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    /// `M`, the number of explained features.
    pub fn num_features(&self) -> usize {
        self.groups.len()
    }

    pub fn empty(&self) -> Coalition {
        Coalition::empty(self.num_features())
    }

    pub fn full(&self) -> Coalition {
        Coalition::full(self.num_features())
    }

    pub fn masked_input(&self, s: Coalition) -> Vec<f64> {
        let mut out = self.reference.clone();
        self.mask_into(s, &mut out);
        out
    }

    /// Like [`masked_input`](Self::masked_input) but writes over a buffer that
    /// already holds reference values for every column outside `s`'s groups.
    fn mask_into(&self, s: Coalition, out: &mut [f64]) {
        debug_assert_eq!(s.num_features(), self.num_features());
        for i in s.iter() {
            for &c in &self.groups.features[i].columns {
                out[c] = self.x[c];
            }
        }
    }

    pub fn eval(&self, s: Coalition) -> Result<f64> {
        self.model.forward(&self.masked_input(s))
    }

    /// Element-wise [`eval`](Self::eval), order preserved.
    pub fn eval_batch(&self, coalitions: &[Coalition]) -> Result<Vec<f64>> {
        coalitions.iter().map(|&s| self.eval(s)).collect()
    }

    /// Parallel [`eval_batch`](Self::eval_batch); identical output for any thread count.
    pub fn eval_batch_par(&self, coalitions: &[Coalition]) -> Result<Vec<f64>> {
        coalitions.par_iter().map(|&s| self.eval(s)).collect()
    }

    /// Signed column deviations `x - x̄`.
    pub fn column_deviation(&self) -> Vec<f64> {
        self.x.iter().zip(&self.reference).map(|(a, b)| a - b).collect()
    }

    /// `|x_i - x̄_i|`, the Euclidean norm over the columns of a grouped feature.
    pub fn feature_deviation(&self, i: usize) -> f64 {
        self.groups.features[i]
            .columns
            .iter()
            .map(|&c| (self.x[c] - self.reference[c]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn feature_deviations(&self) -> Vec<f64> {
        (0..self.num_features()).map(|i| self.feature_deviation(i)).collect()
    }
}

/// Counts value-function calls made through it.
pub struct CountingEval<'v, 'a> {
    vf: &'v ValueFunction<'a>,
    calls: Cell<u64>,
}

impl<'v, 'a> CountingEval<'v, 'a> {
    pub fn new(vf: &'v ValueFunction<'a>) -> Self {
        Self { vf, calls: Cell::new(0) }
    }

    pub fn eval(&self, s: Coalition) -> Result<f64> {
        self.calls.set(self.calls.get() + 1);
        self.vf.eval(s)
    }

    pub fn calls(&self) -> u64 {
        self.calls.get()
    }
}

//! A model, its feature groups, reference values and the rows to explain.

use std::path::Path;

use shear_core::model::{load_model, train, AnyModel, LabeledData, Model};
use shear_core::value::{GroupMap, RefPolicy, ReferenceVector, ValueFunction};

use crate::config::{BenchConfig, ModelSource, TrainSpec};
use crate::data::{groups_or_singletons, read_json, reference_for, Table};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Binding {
    pub model: AnyModel,
    pub groups: GroupMap,
    pub reference: Vec<f64>,
    pub columns: Vec<String>,
    pub instances: Vec<Vec<f64>>,
}

/// File inputs shared by the harness and the individual commands.
#[derive(Debug, Clone, Copy)]
pub struct Sources<'a> {
    pub model: &'a Path,
    pub instances: &'a Path,
    pub label: Option<&'a str>,
    pub groups: Option<&'a Path>,
    /// Reference vector file; takes precedence over `background`.
    pub reference: Option<&'a Path>,
    /// Rows to derive references from; defaults to `instances`.
    pub background: Option<&'a Path>,
    pub categorical: RefPolicy,
    pub limit: Option<usize>,
}

struct Refs<'a> {
    groups: Option<&'a Path>,
    reference: Option<&'a Path>,
    categorical: RefPolicy,
    limit: Option<usize>,
}

fn load_reference(
    reference: Option<&Path>,
    background: &Table,
    groups: &GroupMap,
    categorical: RefPolicy,
) -> Result<Vec<f64>> {
    let values = match reference {
        Some(p) => read_json::<ReferenceVector>(p)?.values,
        None => reference_for(&background.rows, groups, categorical)?.values,
    };
    if values.len() != background.columns.len() {
        return Err(Error::Config(format!(
            "reference has {} values for {} columns",
            values.len(),
            background.columns.len()
        )));
    }
    Ok(values)
}

fn same_columns(a: &Table, b: &Table, what: &str) -> Result<()> {
    if a.columns != b.columns {
        return Err(Error::Config(format!("{what} columns {:?} differ from {:?}", b.columns, a.columns)));
    }
    Ok(())
}

impl Binding {
    fn assemble(model: AnyModel, background: Table, instances: Table, s: &Refs<'_>) -> Result<Self> {
        same_columns(&background, &instances, "instance")?;
        if model.input_dim() != instances.columns.len() {
            return Err(Error::Config(format!(
                "model expects {} inputs but the data has {} columns",
                model.input_dim(),
                instances.columns.len()
            )));
        }
        let groups = groups_or_singletons(s.groups, &instances.columns)?;
        let reference = load_reference(s.reference, &background, &groups, s.categorical)?;
        let mut rows = instances.rows;
        if let Some(k) = s.limit {
            rows.truncate(k);
        }
        if rows.is_empty() {
            return Err(Error::Config("no instances to explain".into()));
        }
        Ok(Self { model, groups, reference, columns: instances.columns, instances: rows })
    }

    pub fn load(s: &Sources<'_>) -> Result<Self> {
        let model = load_model(s.model)?;
        let instances = Table::read(s.instances)?.without(s.label);
        let background = match s.background {
            Some(p) => Table::read(p)?.without(s.label),
            None => instances.clone(),
        };
        let refs = Refs { groups: s.groups, reference: s.reference, categorical: s.categorical, limit: s.limit };
        Self::assemble(model, background, instances, &refs)
    }

    /// Loads everything a benchmark run needs, training the model first if asked.
    pub fn from_config(cfg: &BenchConfig) -> Result<Self> {
        let label = cfg.label_column.as_deref();
        let dataset = Table::read(&cfg.dataset)?;
        let (background, model) = match &cfg.model {
            ModelSource::Path(p) => (dataset.without(label), load_model(p)?),
            ModelSource::Train(spec) => {
                let (x, y) = dataset.split_label(label.unwrap_or_default())?;
                let model = train_model(&x, y, spec)?;
                (x, model)
            }
        };
        let instances = match &cfg.instances {
            Some(p) => Table::read(p)?.without(label),
            None => background.clone(),
        };
        let refs = Refs {
            groups: cfg.groups.as_deref(),
            reference: cfg.reference.as_deref(),
            categorical: cfg.categorical_reference,
            limit: cfg.instance_limit,
        };
        Self::assemble(model, background, instances, &refs)
    }

    pub fn num_features(&self) -> usize {
        self.groups.len()
    }

    pub fn value_function(&self, instance: usize) -> Result<ValueFunction<'_>> {
        Ok(ValueFunction::new(&self.model, &self.groups, self.instances[instance].clone(), self.reference.clone())?)
    }
}

/// Trains the model described by `spec` on `x` and labels `y`.
pub fn train_model(x: &Table, y: Vec<f64>, spec: &TrainSpec) -> Result<AnyModel> {
    spec.validate()?;
    let data = LabeledData::new(x.rows.clone(), y)?;
    let model = train(&data, &spec.architecture(), spec.head, &spec.optimiser)?;
    Ok(model.into())
}

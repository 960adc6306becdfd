//! Benchmark configuration, read from JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use shear_core::model::{Activation, Head, LayerSpec, Loss, TrainConfig};
use shear_core::value::RefPolicy;
use shear_core::Method;

use crate::data::{read_json, resolve};
use crate::error::{Error, Result};

/// Where ground-truth attributions come from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleSource {
    /// Brute-force enumeration; needs `M <= 20`.
    Compute,
    /// An `oracle.csv` written by an earlier run or by `shear oracle`.
    Path(PathBuf),
    /// No ground truth; only perturbation metrics are available.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Ae,
    Acc,
    Faithfulness,
    Monotonicity,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] = [MetricKind::Ae, MetricKind::Acc, MetricKind::Faithfulness, MetricKind::Monotonicity];

    pub fn needs_oracle(self) -> bool {
        matches!(self, MetricKind::Ae | MetricKind::Acc)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Ae => "ae",
            MetricKind::Acc => "acc",
            MetricKind::Faithfulness => "faithfulness",
            MetricKind::Monotonicity => "monotonicity",
        }
    }
}

/// Architecture and optimiser settings for training a model inside a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSpec {
    pub hidden: Vec<usize>,
    #[serde(default = "default_activation")]
    pub activation: Activation,
    #[serde(default = "default_head")]
    pub head: Head,
    #[serde(flatten)]
    pub optimiser: TrainConfig,
}

fn default_activation() -> Activation {
    Activation::Tanh
}

fn default_head() -> Head {
    Head::Scalar
}

impl TrainSpec {
    pub fn architecture(&self) -> Vec<LayerSpec> {
        let mut arch: Vec<LayerSpec> = self.hidden.iter().map(|&w| LayerSpec::new(w, self.activation)).collect();
        arch.push(LayerSpec::new(self.head_outputs(), Activation::Identity));
        arch
    }

    fn head_outputs(&self) -> usize {
        match self.head {
            Head::Scalar => 1,
            Head::LogitDiff => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden.contains(&0) {
            return Err(Error::Config("hidden layer widths must be positive".into()));
        }
        if self.head == Head::LogitDiff && self.optimiser.loss == Loss::CrossEntropy {
            return Err(Error::Config("cross_entropy training needs the scalar head".into()));
        }
        self.optimiser.validate()?;
        Ok(())
    }
}

/// The model to explain: a saved file, or one trained on `dataset` first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSource {
    Path(PathBuf),
    Train(TrainSpec),
}

fn default_metrics() -> Vec<MetricKind> {
    MetricKind::ALL.to_vec()
}

fn default_oracle() -> OracleSource {
    OracleSource::Compute
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_true() -> bool {
    true
}

fn default_categorical() -> RefPolicy {
    RefPolicy::Mode
}

/// A full benchmark sweep. Relative paths are resolved against the directory of
/// the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    /// Background rows: reference values are computed from them, and a trained
    /// model is fitted on them.
    pub dataset: PathBuf,
    /// Rows to explain; defaults to `dataset`.
    #[serde(default)]
    pub instances: Option<PathBuf>,
    #[serde(default)]
    pub label_column: Option<String>,
    #[serde(default)]
    pub groups: Option<PathBuf>,
    /// Precomputed reference vector; otherwise derived from `dataset`.
    #[serde(default)]
    pub reference: Option<PathBuf>,
    #[serde(default = "default_categorical")]
    pub categorical_reference: RefPolicy,
    pub model: ModelSource,
    pub methods: Vec<Method>,
    pub budgets: Vec<u64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub instance_limit: Option<usize>,
    pub output_dir: PathBuf,
    #[serde(default = "default_oracle")]
    pub oracle: OracleSource,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<MetricKind>,
    /// Explain instances on all cores. Throughput is still timed on one thread.
    #[serde(default)]
    pub parallel: bool,
    #[serde(default = "default_true")]
    pub throughput: bool,
}

/// A config file may hold a config directly or a run manifest embedding one.
#[derive(Deserialize)]
#[serde(untagged)]
enum ConfigFile {
    Manifest { config: Box<BenchConfig> },
    Plain(Box<BenchConfig>),
}

impl BenchConfig {
    /// Reads a config or manifest and resolves its paths against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let cfg = match read_json::<ConfigFile>(path) {
            Ok(ConfigFile::Manifest { config }) | Ok(ConfigFile::Plain(config)) => *config,
            Err(Error::Format { path, message }) => {
                return Err(Error::Config(format!("{}: {message}", path.display())));
            }
            Err(e) => return Err(e),
        };
        let base = path.parent().unwrap_or(Path::new("."));
        Ok(cfg.resolved(base))
    }

    /// Rewrites every relative path to be relative to `base`.
    pub fn resolved(mut self, base: &Path) -> Self {
        let fix = |p: &mut PathBuf| *p = resolve(base, p);
        fix(&mut self.dataset);
        fix(&mut self.output_dir);
        for p in [&mut self.instances, &mut self.groups, &mut self.reference].into_iter().flatten() {
            fix(p);
        }
        if let ModelSource::Path(p) = &mut self.model {
            fix(p);
        }
        if let OracleSource::Path(p) = &mut self.oracle {
            fix(p);
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        if self.methods.contains(&Method::Exact) {
            return Err(Error::Config("exact is the oracle, not a benchmarked method".into()));
        }
        if self.budgets.is_empty() {
            return Err(Error::Config("at least one budget is required".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.methods.contains(&Method::Shear) {
            if let Some(n) = self.budgets.iter().find(|&&n| n < 2 || !n.is_power_of_two()) {
                return Err(Error::Config(format!("shear budgets must be powers of two >= 2, got {n}")));
            }
        }
        if self.instance_limit == Some(0) {
            return Err(Error::Config("instance_limit must be positive".into()));
        }
        if self.oracle == OracleSource::None {
            if let Some(m) = self.metrics.iter().find(|m| m.needs_oracle()) {
                return Err(Error::Config(format!("metric {} needs an oracle", m.as_str())));
            }
        }
        if let ModelSource::Train(spec) = &self.model {
            spec.validate()?;
            if self.label_column.is_none() {
                return Err(Error::Config("training a model needs label_column".into()));
            }
        }
        Ok(())
    }
}

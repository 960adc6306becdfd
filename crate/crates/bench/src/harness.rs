//! The benchmark sweep: every method at every budget and seed on every instance.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use shear_core::estimate::explain;
use shear_core::exact::{exact_shapley, EXACT_MAX_FEATURES};
use shear_core::{rng, Attribution, Method};

use crate::binding::Binding;
use crate::config::{BenchConfig, MetricKind, OracleSource};
use crate::error::{Error, Result};
use crate::records::{
    attributions_csv, metrics_csv, read_attributions, serde_csv, AggregateRow, AttributionRow, CellRow, MetricRow,
    ThroughputRecord,
};
use crate::report::{aggregate, evaluate, oracle_by_instance, preceding_differences};

pub const ATTRIBUTIONS_FILE: &str = "attributions.csv";
pub const ORACLE_FILE: &str = "oracle.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const CELLS_FILE: &str = "cells.csv";
pub const THROUGHPUT_FILE: &str = "throughput.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Seed of one `(method, N, instance)` explanation, independent of sweep order.
pub fn cell_seed(master: u64, method: Method, n: u64, instance: usize) -> u64 {
    rng::mix(master, rng::fnv1a(format!("{method}|{n}|{instance}").as_bytes()))
}

/// Hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// First 16 hex digits of the SHA-256 of the serialised config.
pub fn config_hash(cfg: &BenchConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serialises");
    sha256_hex(&bytes)[..16].to_string()
}

/// Operating system, architecture and available parallelism of this machine.
pub fn host_description() -> String {
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    format!("{}-{} {cores} threads", std::env::consts::OS, std::env::consts::ARCH)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Explains every instance in order; any failure aborts the whole cell.
pub fn explain_all(binding: &Binding, method: Method, n: u64, master: u64, parallel: bool) -> Result<Vec<Attribution>> {
    let one = |i: usize| -> Result<Attribution> {
        Ok(explain(&binding.value_function(i)?, method, n, cell_seed(master, method, n, i))?)
    };
    if parallel {
        (0..binding.instances.len()).into_par_iter().map(one).collect()
    } else {
        (0..binding.instances.len()).map(one).collect()
    }
}

/// Single-threaded wall-clock time of explaining every instance once.
pub fn measure_throughput(binding: &Binding, method: Method, n: u64, master: u64, hash: &str) -> Result<ThroughputRecord> {
    let start = Instant::now();
    explain_all(binding, method, n, master, false)?;
    let secs = start.elapsed().as_secs_f64();
    Ok(ThroughputRecord::new(hash, method, n, binding.instances.len(), secs, &host_description()))
}

fn exact_rows(binding: &Binding, parallel: bool) -> Result<Vec<AttributionRow>> {
    let one = |i: usize| -> Result<AttributionRow> {
        Ok(AttributionRow::new(i, None, &exact_shapley(&binding.value_function(i)?)?))
    };
    if parallel {
        (0..binding.instances.len()).into_par_iter().map(one).collect()
    } else {
        (0..binding.instances.len()).map(one).collect()
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    config: &'a BenchConfig,
    config_hash: &'a str,
    num_features: usize,
    num_instances: usize,
    seed_derivation: &'static str,
    kernel_averaging: &'static str,
    budget_parity: &'static str,
    files: Vec<(&'static str, String)>,
    unhashed: Vec<&'static str>,
}

/// Everything a run produced, also written to the output directory.
#[derive(Debug, Clone)]
pub struct BenchReport {
    pub output_dir: PathBuf,
    pub config_hash: String,
    pub features: Vec<String>,
    pub oracle: Option<Vec<Vec<f64>>>,
    pub attributions: Vec<AttributionRow>,
    pub metrics: Vec<MetricRow>,
    pub aggregates: Vec<AggregateRow>,
    pub cells: Vec<CellRow>,
    pub throughput: Vec<ThroughputRecord>,
}

impl BenchReport {
    /// Mean of `metric` for `(method, n)`, if any value is defined.
    pub fn mean(&self, method: Method, n: u64, metric: MetricKind) -> Option<f64> {
        self.aggregates
            .iter()
            .find(|a| a.method == method && a.budget_n == n && a.metric == metric.as_str())
            .and_then(|a| a.mean)
    }
}

/// Runs the sweep described by `cfg` and writes its CSVs and manifest.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let binding = Binding::from_config(cfg)?;
    run_bench_with(cfg, &binding)
}

/// [`run_bench`] on an already loaded binding.
pub fn run_bench_with(cfg: &BenchConfig, binding: &Binding) -> Result<BenchReport> {
    cfg.validate()?;
    let m = binding.num_features();
    let hash = config_hash(cfg);
    let features: Vec<String> = binding.groups.names().map(str::to_string).collect();
    if cfg.throughput && binding.instances.len() < 10 {
        return Err(Error::Config(format!(
            "throughput needs at least 10 instances, got {}; set \"throughput\": false",
            binding.instances.len()
        )));
    }

    let oracle_rows = match &cfg.oracle {
        OracleSource::Compute => {
            if m > EXACT_MAX_FEATURES {
                return Err(Error::Config(format!("computing the oracle needs M <= {EXACT_MAX_FEATURES}, got {m}")));
            }
            info!("computing exact attributions for {} instances", binding.instances.len());
            Some(exact_rows(binding, cfg.parallel)?)
        }
        OracleSource::Path(p) => Some(read_attributions(p)?.1),
        OracleSource::None => None,
    };
    let oracle = oracle_rows.as_deref().map(|r| oracle_by_instance(r, binding.instances.len())).transpose()?;
    if let Some(o) = &oracle {
        if o.iter().any(|phi| phi.len() != m) {
            return Err(Error::Config(format!("oracle attributions do not have {m} features")));
        }
    }
    let diffs = if cfg.metrics.contains(&MetricKind::Faithfulness) {
        Some(preceding_differences(binding, cfg.parallel)?)
    } else {
        None
    };

    let mut attributions = Vec::new();
    let mut cells = Vec::new();
    let mut throughput = Vec::new();
    for &method in &cfg.methods {
        for &n in &cfg.budgets {
            let mut timed_secs = 0.0;
            let mut timed_instances = 0;
            let mut ok_seed = None;
            for &seed in &cfg.seeds {
                let start = Instant::now();
                let result = explain_all(binding, method, n, seed, cfg.parallel);
                let secs = start.elapsed().as_secs_f64();
                let mut cell = CellRow {
                    config_hash: hash.clone(),
                    method,
                    budget_n: n,
                    seed,
                    status: "ok".into(),
                    instances: 0,
                    value_calls: 0,
                    error: String::new(),
                };
                match result {
                    Ok(explained) => {
                        cell.instances = explained.len();
                        cell.value_calls = explained.iter().map(|a| a.eval_count).sum();
                        ok_seed.get_or_insert(seed);
                        if !cfg.parallel {
                            timed_secs += secs;
                            timed_instances += explained.len();
                        }
                        attributions.extend(explained.iter().enumerate().map(|(i, a)| AttributionRow::new(i, Some(seed), a)));
                    }
                    Err(e) => {
                        warn!("{method} N={n} seed={seed}: {e}");
                        cell.status = "failed".into();
                        cell.error = e.to_string();
                    }
                }
                cells.push(cell);
            }
            if cfg.throughput {
                if let Some(seed) = ok_seed {
                    if cfg.parallel {
                        throughput.push(measure_throughput(binding, method, n, seed, &hash)?);
                    } else {
                        throughput.push(ThroughputRecord::new(&hash, method, n, timed_instances, timed_secs, &host_description()));
                    }
                }
            }
        }
    }

    let metrics = evaluate(binding, &attributions, oracle.as_deref(), diffs.as_deref(), &cfg.metrics, cfg.parallel)?;
    let aggregates = aggregate(&hash, &metrics, &cfg.metrics);

    fs::create_dir_all(&cfg.output_dir)?;
    let mut files = Vec::new();
    let mut emit = |name: &'static str, bytes: Vec<u8>, hashed: bool| -> Result<()> {
        write_atomic(&cfg.output_dir.join(name), &bytes)?;
        if hashed {
            files.push((name, sha256_hex(&bytes)));
        }
        Ok(())
    };
    emit(ATTRIBUTIONS_FILE, attributions_csv(&hash, &features, &attributions)?, true)?;
    if let (OracleSource::Compute, Some(rows)) = (&cfg.oracle, &oracle_rows) {
        emit(ORACLE_FILE, attributions_csv(&hash, &features, rows)?, true)?;
    }
    emit(METRICS_FILE, metrics_csv(&hash, &metrics)?, true)?;
    emit(AGGREGATE_FILE, serde_csv(&aggregates)?, true)?;
    emit(CELLS_FILE, serde_csv(&cells)?, true)?;
    if cfg.throughput {
        emit(THROUGHPUT_FILE, serde_csv(&throughput)?, false)?;
    }
    let manifest = Manifest {
        config: cfg,
        config_hash: &hash,
        num_features: m,
        num_instances: binding.instances.len(),
        seed_derivation: "seed of (method, N, instance) = mix(master seed, fnv1a(\"method|N|instance\"))",
        kernel_averaging: "kernel methods average the attributions of M independent regressions; metrics are computed once on the average",
        budget_parity: "every estimator spends N * M value-function calls per instance",
        files,
        unhashed: if cfg.throughput { vec![THROUGHPUT_FILE] } else { vec![] },
    };
    let mut text = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)?;
    text.push('\n');
    write_atomic(&cfg.output_dir.join(MANIFEST_FILE), text.as_bytes())?;

    Ok(BenchReport {
        output_dir: cfg.output_dir.clone(),
        config_hash: hash,
        features,
        oracle,
        attributions,
        metrics,
        aggregates,
        cells,
        throughput,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_seeds_depend_on_every_coordinate() {
        let base = cell_seed(1, Method::Shear, 16, 0);
        assert_eq!(base, cell_seed(1, Method::Shear, 16, 0));
        assert_ne!(base, cell_seed(2, Method::Shear, 16, 0));
        assert_ne!(base, cell_seed(1, Method::Permutation, 16, 0));
        assert_ne!(base, cell_seed(1, Method::Shear, 32, 0));
        assert_ne!(base, cell_seed(1, Method::Shear, 16, 1));
    }

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}

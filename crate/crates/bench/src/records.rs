//! CSV row types for attributions, metrics, aggregates, cell status and throughput.

use std::path::Path;

use serde::{Deserialize, Serialize};
use shear_core::metrics::MetricRecord;
use shear_core::{Attribution, Method};

use crate::error::{Error, Result};

/// One explanation: identifying columns followed by one `phi:<feature>` column per feature.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributionRow {
    pub method: Method,
    pub budget_n: u64,
    pub seed: Option<u64>,
    pub instance_id: usize,
    pub eval_count: u64,
    pub regularized: bool,
    pub phi: Vec<f64>,
}

impl AttributionRow {
    pub fn new(instance_id: usize, seed: Option<u64>, a: &Attribution) -> Self {
        Self {
            method: a.method,
            budget_n: a.budget_n,
            seed,
            instance_id,
            eval_count: a.eval_count,
            regularized: a.regularized,
            phi: a.phi.clone(),
        }
    }
}

const ATTRIBUTION_KEYS: [&str; 7] = ["config_hash", "method", "budget_n", "seed", "instance_id", "eval_count", "regularized"];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn attributions_csv(config_hash: &str, features: &[String], rows: &[AttributionRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ATTRIBUTION_KEYS.iter().map(|s| s.to_string()).collect();
    header.extend(features.iter().map(|f| format!("phi:{f}")));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            config_hash.to_string(),
            r.method.to_string(),
            r.budget_n.to_string(),
            opt(r.seed),
            r.instance_id.to_string(),
            r.eval_count.to_string(),
            r.regularized.to_string(),
        ];
        rec.extend(r.phi.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Reads an attribution CSV, returning its feature names and rows.
pub fn read_attributions(path: &Path) -> Result<(Vec<String>, Vec<AttributionRow>)> {
    let bad = |message: String| Error::Format { path: path.to_path_buf(), message };
    let file = std::fs::File::open(path).map_err(|source| Error::Read { path: path.to_path_buf(), source })?;
    let mut rdr = csv::Reader::from_reader(file);
    let header = rdr.headers()?.clone();
    if header.len() < ATTRIBUTION_KEYS.len() || header.iter().zip(ATTRIBUTION_KEYS).any(|(a, b)| a != b) {
        return Err(bad(format!("expected header starting with {}", ATTRIBUTION_KEYS.join(","))));
    }
    let features: Vec<String> = header
        .iter()
        .skip(ATTRIBUTION_KEYS.len())
        .map(|h| h.strip_prefix("phi:").unwrap_or(h).to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let at = |c: usize| rec.get(c).unwrap_or("");
        let line = i + 2;
        let num = |c: usize| at(c).parse::<f64>().map_err(|_| bad(format!("line {line}: bad number {:?}", at(c))));
        let int = |c: usize| at(c).parse::<u64>().map_err(|_| bad(format!("line {line}: bad integer {:?}", at(c))));
        rows.push(AttributionRow {
            method: at(1).parse().map_err(|_| bad(format!("line {line}: unknown method {:?}", at(1))))?,
            budget_n: int(2)?,
            seed: if at(3).is_empty() { None } else { Some(int(3)?) },
            instance_id: int(4)? as usize,
            eval_count: int(5)?,
            regularized: at(6) == "true",
            phi: (ATTRIBUTION_KEYS.len()..rec.len()).map(num).collect::<Result<_>>()?,
        });
    }
    Ok((features, rows))
}

/// Metrics of one explanation together with the master seed of its cell.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub seed: Option<u64>,
    pub record: MetricRecord,
}

pub fn metrics_csv(config_hash: &str, rows: &[MetricRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "config_hash",
        "method",
        "budget_n",
        "seed",
        "instance_id",
        "ae",
        "acc",
        "faithfulness",
        "monotonicity",
    ])?;
    for MetricRow { seed, record: r } in rows {
        w.write_record([
            config_hash.to_string(),
            r.method.to_string(),
            r.budget_n.to_string(),
            opt(*seed),
            r.instance_id.to_string(),
            opt(r.ae),
            opt(r.acc),
            opt(r.faithfulness),
            opt(r.monotonicity),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Mean and population standard deviation of one metric over a `(method, N)` group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub config_hash: String,
    pub method: Method,
    pub budget_n: u64,
    pub metric: String,
    pub count: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

/// Outcome of one `(method, N, seed)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub config_hash: String,
    pub method: Method,
    pub budget_n: u64,
    pub seed: u64,
    pub status: String,
    pub instances: usize,
    pub value_calls: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputRecord {
    pub config_hash: String,
    pub method: Method,
    pub budget_n: u64,
    pub n_test: usize,
    pub t_total: f64,
    pub throughput: f64,
    pub host: String,
}

impl ThroughputRecord {
    pub fn new(config_hash: &str, method: Method, budget_n: u64, n_test: usize, t_total: f64, host: &str) -> Self {
        let t_total = t_total.max(f64::MIN_POSITIVE);
        Self {
            config_hash: config_hash.to_string(),
            method,
            budget_n,
            n_test,
            t_total,
            throughput: n_test as f64 / t_total,
            host: host.to_string(),
        }
    }
}

pub fn serde_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn read_serde_csv<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Read { path: path.to_path_buf(), source })?;
    Ok(csv::Reader::from_reader(file).deserialize().collect::<std::result::Result<_, _>>()?)
}

//! Metric evaluation of attribution rows and per-`(method, N)` aggregation.

use std::collections::HashMap;

use rayon::prelude::*;
use shear_core::metrics::{self, MetricRecord};
use shear_core::Method;

use crate::binding::Binding;
use crate::config::MetricKind;
use crate::error::{Error, Result};
use crate::records::{AggregateRow, AttributionRow, MetricRow};

/// Ground-truth attributions indexed by instance.
pub fn oracle_by_instance(rows: &[AttributionRow], instances: usize) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<Option<Vec<f64>>> = vec![None; instances];
    for r in rows.iter().filter(|r| r.method == Method::Exact) {
        if let Some(slot) = out.get_mut(r.instance_id) {
            *slot = Some(r.phi.clone());
        }
    }
    out.into_iter()
        .enumerate()
        .map(|(i, phi)| phi.ok_or_else(|| Error::Config(format!("oracle has no exact attribution for instance {i}"))))
        .collect()
}

/// Leave-one-out drops for every instance.
pub fn preceding_differences(binding: &Binding, parallel: bool) -> Result<Vec<Vec<f64>>> {
    let one = |i: usize| -> Result<Vec<f64>> { Ok(metrics::preceding_differences(&binding.value_function(i)?)?) };
    if parallel {
        (0..binding.instances.len()).into_par_iter().map(one).collect()
    } else {
        (0..binding.instances.len()).map(one).collect()
    }
}

/// Computes the requested metrics for every row. `diffs` are the leave-one-out
/// drops from [`preceding_differences`], needed only for faithfulness.
pub fn evaluate(
    binding: &Binding,
    rows: &[AttributionRow],
    oracle: Option<&[Vec<f64>]>,
    diffs: Option<&[Vec<f64>]>,
    wanted: &[MetricKind],
    parallel: bool,
) -> Result<Vec<MetricRow>> {
    let want = |k: MetricKind| wanted.contains(&k);
    if oracle.is_none() && wanted.iter().any(|k| k.needs_oracle()) {
        return Err(Error::Config("ae and acc need oracle attributions".into()));
    }
    if diffs.is_none() && want(MetricKind::Faithfulness) {
        return Err(Error::Config("faithfulness needs leave-one-out differences".into()));
    }
    let one = |r: &AttributionRow| -> Result<MetricRow> {
        if r.instance_id >= binding.instances.len() {
            return Err(Error::Config(format!("instance {} is out of range", r.instance_id)));
        }
        let truth = oracle.map(|o| &o[r.instance_id]);
        let ae = match truth {
            Some(t) if want(MetricKind::Ae) => Some(metrics::abs_error(t, &r.phi)?),
            _ => None,
        };
        let acc = match truth {
            Some(t) if want(MetricKind::Acc) => Some(metrics::rank_accuracy(t, &r.phi)?),
            _ => None,
        };
        let faithfulness = match diffs {
            Some(d) if want(MetricKind::Faithfulness) && r.phi.len() >= 2 => metrics::pearson(&d[r.instance_id], &r.phi)?,
            _ => None,
        };
        let monotonicity = if want(MetricKind::Monotonicity) && r.phi.len() >= 2 {
            Some(metrics::monotonicity(&binding.value_function(r.instance_id)?, &r.phi)?)
        } else {
            None
        };
        let record = MetricRecord {
            instance_id: r.instance_id,
            method: r.method,
            budget_n: r.budget_n,
            ae,
            acc,
            faithfulness,
            monotonicity,
        };
        Ok(MetricRow { seed: r.seed, record })
    };
    if parallel {
        rows.par_iter().map(one).collect()
    } else {
        rows.iter().map(one).collect()
    }
}

fn metric_value(r: &MetricRecord, k: MetricKind) -> Option<f64> {
    match k {
        MetricKind::Ae => r.ae,
        MetricKind::Acc => r.acc,
        MetricKind::Faithfulness => r.faithfulness,
        MetricKind::Monotonicity => r.monotonicity,
    }
}

/// Mean and population standard deviation per `(method, N, metric)` over every
/// instance and seed, skipping undefined values. Groups keep first-seen order.
pub fn aggregate(config_hash: &str, rows: &[MetricRow], wanted: &[MetricKind]) -> Vec<AggregateRow> {
    let mut order: Vec<(Method, u64)> = Vec::new();
    let mut groups: HashMap<(Method, u64), Vec<&MetricRecord>> = HashMap::new();
    for r in rows {
        let key = (r.record.method, r.record.budget_n);
        groups
            .entry(key)
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(&r.record);
    }
    let mut out = Vec::new();
    for key in order {
        for &k in wanted {
            let vals: Vec<f64> = groups[&key].iter().filter_map(|r| metric_value(r, k)).collect();
            let (mean, std) = if vals.is_empty() {
                (None, None)
            } else {
                let n = vals.len() as f64;
                let mean = vals.iter().sum::<f64>() / n;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                (Some(mean), Some(var.sqrt()))
            };
            out.push(AggregateRow {
                config_hash: config_hash.to_string(),
                method: key.0,
                budget_n: key.1,
                metric: k.as_str().to_string(),
                count: vals.len(),
                mean,
                std,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: Method, n: u64, ae: Option<f64>) -> MetricRow {
        MetricRow {
            seed: Some(0),
            record: MetricRecord { instance_id: 0, method, budget_n: n, ae, acc: None, faithfulness: None, monotonicity: None },
        }
    }

    #[test]
    fn aggregate_skips_undefined_values() {
        let rows = [row(Method::Shear, 8, Some(1.0)), row(Method::Shear, 8, Some(3.0)), row(Method::Shear, 8, None), row(Method::Permutation, 8, None)];
        let agg = aggregate("h", &rows, &[MetricKind::Ae]);
        assert_eq!(agg.len(), 2);
        assert_eq!((agg[0].count, agg[0].mean, agg[0].std), (2, Some(2.0), Some(1.0)));
        assert_eq!(agg[1].method, Method::Permutation);
        assert_eq!((agg[1].count, agg[1].mean), (0, None));
    }

    #[test]
    fn missing_oracle_instance_is_a_config_error() {
        let rows = [AttributionRow { method: Method::Exact, budget_n: 0, seed: None, instance_id: 1, eval_count: 0, regularized: false, phi: vec![1.0] }];
        assert!(matches!(oracle_by_instance(&rows, 2), Err(Error::Config(_))));
    }
}

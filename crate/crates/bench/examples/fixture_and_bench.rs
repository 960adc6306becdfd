//! Builds a tanh fixture, runs a budget-matched sweep and prints the aggregate table.
//!
//! `cargo run -p shear-bench --example fixture_and_bench --release`

use shear_bench::config::{BenchConfig, MetricKind, ModelSource, OracleSource};
use shear_bench::fixture::{make_fixture, FixtureKind};
use shear_bench::run_bench;
use shear_core::value::RefPolicy;
use shear_core::Method;

fn main() -> shear_bench::Result<()> {
    let root = std::env::temp_dir().join("shear_example_bench");
    let files = make_fixture(FixtureKind::TanhMlp, 8, 1, &root.join("fixture"))?;
    let cfg = BenchConfig {
        dataset: files.train.clone(),
        instances: Some(files.test.clone()),
        label_column: Some("label".into()),
        groups: Some(files.groups.clone()),
        reference: Some(files.reference.clone()),
        categorical_reference: RefPolicy::Mode,
        model: ModelSource::Path(files.model.clone()),
        methods: Method::ESTIMATORS.to_vec(),
        budgets: vec![16, 64],
        seeds: vec![0, 1],
        instance_limit: Some(50),
        output_dir: root.join("out"),
        oracle: OracleSource::Compute,
        metrics: MetricKind::ALL.to_vec(),
        parallel: true,
        throughput: true,
    };
    let report = run_bench(&cfg)?;
    println!("config {} written to {}", report.config_hash, report.output_dir.display());
    for row in &report.aggregates {
        let (mean, std) = (row.mean.unwrap_or(f64::NAN), row.std.unwrap_or(f64::NAN));
        println!("{:<8} {:>4} {:<13} {mean:>10.4} +- {std:.4} (n = {})", row.method.as_str(), row.budget_n, row.metric, row.count);
    }
    for cell in report.cells.iter().filter(|c| c.status != "ok") {
        println!("failed cell {} N = {}: {}", cell.method.as_str(), cell.budget_n, cell.error);
    }
    Ok(())
}

//! Benchmark harness for `shear-core`: dataset and fixture handling, budget-matched
//! sweeps over every estimator, metric reports and throughput measurement.
//!
//! The `shear` binary exposes the same operations as subcommands.

pub mod binding;
pub mod config;
pub mod data;
pub mod error;
pub mod fixture;
pub mod harness;
pub mod records;
pub mod report;

pub use binding::{Binding, Sources};
pub use config::{BenchConfig, MetricKind, ModelSource, OracleSource, TrainSpec};
pub use error::{Error, Result};
pub use fixture::{make_fixture, FixtureFiles, FixtureKind};
pub use harness::{run_bench, run_bench_with, BenchReport};

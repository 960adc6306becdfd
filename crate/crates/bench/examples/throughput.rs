//! Single-threaded explanations per second on the committed fixture, by method and budget.
//!
//! `cargo run -p shear-bench --example throughput --release`

use std::path::Path;

use shear_bench::fixture::FixtureFiles;
use shear_bench::harness::{host_description, measure_throughput};
use shear_bench::{Binding, Sources};
use shear_core::value::RefPolicy;
use shear_core::Method;

fn main() -> shear_bench::Result<()> {
    let files = FixtureFiles::in_dir(&Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/tanh_mlp_m8"));
    let binding = Binding::load(&Sources {
        model: &files.model,
        instances: &files.test,
        label: Some("label"),
        groups: Some(&files.groups),
        reference: Some(&files.reference),
        background: None,
        categorical: RefPolicy::Mode,
        limit: None,
    })?;
    println!("{}", host_description());
    for method in [Method::Shear, Method::KernelShap, Method::AntitheticPermutation] {
        for n in [16, 64, 256] {
            let t = measure_throughput(&binding, method, n, 0, "")?;
            println!("{:<6} N = {n:>3}: {:>9.1} instances/s over {} instances", method.as_str(), t.throughput, t.n_test);
        }
    }
    Ok(())
}

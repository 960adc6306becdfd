use std::path::Path;

use shear_bench::fixture::FixtureFiles;
use shear_bench::harness::measure_throughput;
use shear_bench::{Binding, Sources};
use shear_core::value::RefPolicy;
use shear_core::Method;

fn fixture(limit: usize) -> Binding {
    let f = FixtureFiles::in_dir(&Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/tanh_mlp_m8"));
    Binding::load(&Sources {
        model: &f.model,
        instances: &f.test,
        label: Some("label"),
        groups: Some(&f.groups),
        reference: Some(&f.reference),
        background: None,
        categorical: RefPolicy::Mode,
        limit: Some(limit),
    })
    .unwrap()
}

/// Best of several single-threaded passes, to damp scheduler noise.
fn best_throughput(b: &Binding, method: Method, n: u64) -> f64 {
    (0..5).map(|_| measure_throughput(b, method, n, 0, "").unwrap().throughput).fold(0.0, f64::max)
}

// Both timing checks share one test so nothing else runs beside them.
#[test]
fn throughput_is_linear_in_instances_and_falls_with_budget() {
    let half = fixture(100);
    let full = fixture(200);
    measure_throughput(&full, Method::Shear, 64, 0, "").unwrap();
    let (mut a, mut b) = (0.0f64, 0.0f64);
    // interleaved so drift in machine load hits both sizes alike
    for _ in 0..7 {
        a = a.max(measure_throughput(&half, Method::Shear, 64, 0, "").unwrap().throughput);
        b = b.max(measure_throughput(&full, Method::Shear, 64, 0, "").unwrap().throughput);
    }
    assert!((b / a - 1.0).abs() <= 0.2, "100 instances {a:.1}/s vs 200 instances {b:.1}/s");

    let rates: Vec<f64> = [8, 16, 32, 64, 128, 256].iter().map(|&n| best_throughput(&full, Method::Shear, n)).collect();
    for w in rates.windows(2) {
        assert!(w[1] < w[0], "throughput not decreasing: {rates:?}");
    }
}

//! SHEAR at increasing per-feature budgets against the exact oracle.
//!
//! `cargo run -p shear-core --example shear_explain`

use shear_core::exact::exact_shapley;
use shear_core::metrics::abs_error;
use shear_core::model::{Activation, Head, LayerSpec, MlpModel};
use shear_core::shear::{cross_contribution, select_cooperators, shear_explain};
use shear_core::value::{GroupMap, ValueFunction};

fn main() -> shear_core::Result<()> {
    let m = 10;
    let arch = [LayerSpec::new(32, Activation::Tanh), LayerSpec::new(32, Activation::Tanh), LayerSpec::new(1, Activation::Identity)];
    let model = MlpModel::init(m, &arch, Head::Scalar, 7)?;
    let groups = GroupMap::unnamed(m);
    let x: Vec<f64> = (0..m).map(|k| (k as f64 * 0.7).sin() * 1.5).collect();
    let vf = ValueFunction::new(&model, &groups, x, vec![0.0; m])?;

    let eta = cross_contribution(&vf)?;
    let k = 3;
    for i in 0..m {
        println!("feature {i}: cooperators {:?}", select_cooperators(&eta, i, k)?);
    }

    let truth = exact_shapley(&vf)?;
    println!("\n   N   value calls   AE");
    for n in [4u64, 8, 16, 64, 256, 1024] {
        let est = shear_explain(&vf, n, 0)?;
        println!("{n:>4} {:>13} {:>10.3e}", est.eval_count, abs_error(&truth.phi, &est.phi)?);
    }
    Ok(())
}

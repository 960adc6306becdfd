//! Every estimator at the same budget of N value calls per feature, averaged over seeds.
//!
//! `cargo run -p shear-core --example compare_baselines --release`

use shear_core::estimate::explain;
use shear_core::exact::exact_shapley;
use shear_core::metrics::{abs_error, rank_accuracy};
use shear_core::model::{Activation, Head, LayerSpec, MlpModel};
use shear_core::value::{GroupMap, ValueFunction};
use shear_core::Method;

fn main() -> shear_core::Result<()> {
    let m = 8;
    let arch = [LayerSpec::new(32, Activation::Tanh), LayerSpec::new(32, Activation::Tanh), LayerSpec::new(1, Activation::Identity)];
    let model = MlpModel::init(m, &arch, Head::Scalar, 3)?;
    let groups = GroupMap::unnamed(m);
    let x: Vec<f64> = (0..m).map(|k| 1.5 - 0.4 * k as f64).collect();
    let vf = ValueFunction::new(&model, &groups, x, vec![0.0; m])?;
    let truth = exact_shapley(&vf)?;

    let seeds = 20;
    println!("{:<7} {:>4} {:>10} {:>7} {:>8}", "method", "N", "mean AE", "ACC", "calls");
    for n in [16u64, 64] {
        for method in Method::ESTIMATORS {
            let (mut ae, mut acc, mut calls) = (0.0, 0.0, 0);
            for seed in 0..seeds {
                let est = explain(&vf, method, n, seed)?;
                ae += abs_error(&truth.phi, &est.phi)?;
                acc += rank_accuracy(&truth.phi, &est.phi)?;
                calls = est.eval_count;
            }
            let s = seeds as f64;
            println!("{:<7} {n:>4} {:>10.4} {:>7.3} {calls:>8}", method.as_str(), ae / s, acc / s);
        }
    }
    Ok(())
}

//! Ground-truth and ground-truth-free scores for one attribution.
//!
//! `cargo run -p shear-core --example metrics`

use shear_core::exact::exact_shapley;
use shear_core::metrics::{abs_error, faithfulness, monotonicity, prefix_gains, rank_accuracy, ranking};
use shear_core::model::{Activation, Head, LayerSpec, MlpModel};
use shear_core::shear::shear_explain;
use shear_core::value::{GroupMap, ValueFunction};

fn main() -> shear_core::Result<()> {
    let m = 6;
    let arch = [LayerSpec::new(16, Activation::Tanh), LayerSpec::new(1, Activation::Identity)];
    let model = MlpModel::init(m, &arch, Head::Scalar, 11)?;
    let groups = GroupMap::unnamed(m);
    let vf = ValueFunction::new(&model, &groups, vec![0.9, -1.3, 0.2, 1.8, -0.5, 1.1], vec![0.0; m])?;

    let truth = exact_shapley(&vf)?;
    let est = shear_explain(&vf, 4, 1)?;
    println!("true ranking      {:?}", ranking(&truth.phi));
    println!("estimated ranking {:?}", ranking(&est.phi));
    println!("AE            {:.5}", abs_error(&truth.phi, &est.phi)?);
    println!("ACC           {:.5}", rank_accuracy(&truth.phi, &est.phi)?);
    match faithfulness(&vf, &est.phi)? {
        Some(r) => println!("faithfulness  {r:.5}"),
        None => println!("faithfulness  undefined"),
    }
    println!("prefix gains  {:?}", prefix_gains(&vf, &est.phi)?);
    println!("monotonicity  {:.5}", monotonicity(&vf, &est.phi)?);
    Ok(())
}

//! Ground-truth Shapley values of a small tanh network by full enumeration.
//!
//! `cargo run -p shear-core --example exact_oracle`

use shear_core::exact::exact_shapley;
use shear_core::model::{Activation, Head, LayerSpec, MlpModel};
use shear_core::value::{GroupMap, ValueFunction};

fn main() -> shear_core::Result<()> {
    let arch = [LayerSpec::new(16, Activation::Tanh), LayerSpec::new(1, Activation::Identity)];
    let model = MlpModel::init(6, &arch, Head::Scalar, 42)?;
    let groups = GroupMap::unnamed(6);
    let x = vec![1.2, -0.4, 0.0, 2.1, -1.7, 0.6];
    let vf = ValueFunction::new(&model, &groups, x, vec![0.0; 6])?;

    let phi = exact_shapley(&vf)?;
    let gap = vf.eval(vf.full())? - vf.eval(vf.empty())?;
    for (name, v) in groups.names().zip(&phi.phi) {
        println!("{name:>4} {v:+.6}");
    }
    println!("sum {:+.6}  f(U) - f(empty) {:+.6}  value calls {}", phi.sum(), gap, phi.eval_count);
    Ok(())
}

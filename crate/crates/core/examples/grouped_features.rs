//! A one-hot categorical feature explained as a single player.
//!
//! `cargo run -p shear-core --example grouped_features`

use shear_core::exact::exact_shapley;
use shear_core::model::{Activation, Head, LayerSpec, MlpModel};
use shear_core::shear::shear_explain;
use shear_core::value::{compute_reference, FeatureGroup, FeatureKind, GroupMap, RefPolicy, ValueFunction};

fn main() -> shear_core::Result<()> {
    // columns: age, income, colour=red, colour=green, colour=blue
    let groups = GroupMap {
        features: vec![
            FeatureGroup { name: "age".into(), columns: vec![0], kind: FeatureKind::Continuous },
            FeatureGroup { name: "income".into(), columns: vec![1], kind: FeatureKind::Continuous },
            FeatureGroup { name: "colour".into(), columns: vec![2, 3, 4], kind: FeatureKind::Categorical },
        ],
    };
    let background = vec![
        vec![0.2, 1.0, 1.0, 0.0, 0.0],
        vec![-0.4, 0.5, 0.0, 1.0, 0.0],
        vec![1.1, -0.3, 1.0, 0.0, 0.0],
    ];
    let policy = groups.column_policies(5, RefPolicy::Mode);
    let reference = compute_reference(&background, &policy)?;
    println!("reference {:?}", reference.values);

    let arch = [LayerSpec::new(12, Activation::Tanh), LayerSpec::new(1, Activation::Identity)];
    let model = MlpModel::init(5, &arch, Head::Scalar, 8)?;
    let vf = ValueFunction::new(&model, &groups, vec![0.7, -1.0, 0.0, 0.0, 1.0], reference.values)?;
    let exact = exact_shapley(&vf)?;
    let est = shear_explain(&vf, 8, 0)?;
    for ((name, e), s) in groups.names().zip(&exact.phi).zip(&est.phi) {
        println!("{name:>7} exact {e:+.6} shear {s:+.6}");
    }
    Ok(())
}

//! Trains a tanh classifier, saves it as JSON and explains a test row with the reloaded copy.
//!
//! `cargo run -p shear-core --example train_model --release`

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shear_core::model::{accuracy, load_model, save_model, train, Activation, Head, LabeledData, LayerSpec, Loss, TrainConfig};
use shear_core::shear::shear_explain;
use shear_core::value::{GroupMap, ValueFunction};
use shear_core::AnyModel;

fn main() -> shear_core::Result<()> {
    let m = 5;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut rows = |n: usize| -> LabeledData {
        let inputs: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let labels = inputs.iter().map(|x| f64::from(x[0] * x[1] + x[2] > 0.0)).collect();
        LabeledData::new(inputs, labels).unwrap()
    };
    let (train_set, test_set) = (rows(800), rows(200));

    let arch = [LayerSpec::new(24, Activation::Tanh), LayerSpec::new(24, Activation::Tanh), LayerSpec::new(1, Activation::Identity)];
    let cfg = TrainConfig { learning_rate: 0.01, epochs: 80, batch_size: 32, seed: 1, loss: Loss::CrossEntropy };
    let model = train(&train_set, &arch, Head::Scalar, &cfg)?;
    println!("test accuracy {:.3}", accuracy(&model, &test_set)?);

    let path = std::env::temp_dir().join("shear_example_model.json");
    save_model(&AnyModel::from(model), &path)?;
    let reloaded = load_model(&path)?;
    let groups = GroupMap::unnamed(m);
    let vf = ValueFunction::new(&reloaded, &groups, test_set.inputs[0].clone(), vec![0.0; m])?;
    println!("attribution of test row 0 {:?}", shear_explain(&vf, 32, 0)?.phi);
    Ok(())
}

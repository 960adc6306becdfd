//! Reads a CSV with a text column, expands it to one-hot columns grouped as one
//! feature, trains a model on it and explains a row.
//!
//! `cargo run -p shear-bench --example one_hot_ingest --release`

use shear_bench::config::TrainSpec;
use shear_bench::data::{ingest_one_hot, reference_for};
use shear_bench::binding::train_model;
use shear_core::exact::exact_shapley;
use shear_core::value::{RefPolicy, ValueFunction};

fn main() -> shear_bench::Result<()> {
    let dir = std::env::temp_dir().join("shear_example_one_hot");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("pets.csv");
    let mut csv = String::from("age,weight,species,label\n");
    for k in 0..300 {
        let species = ["cat", "dog", "rabbit"][k % 3];
        let age = (k % 17) as f64 / 4.0;
        let weight = ((k * 7) % 23) as f64 / 5.0;
        let label = u8::from(species == "dog" && age > 1.5 || weight > 3.5);
        csv.push_str(&format!("{age},{weight},{species},{label}\n"));
    }
    std::fs::write(&path, csv)?;

    let data = ingest_one_hot(&path, Some("label"), &["species".to_string()])?;
    println!("columns {:?}", data.table.columns);
    println!("features {:?}", data.groups.names().collect::<Vec<_>>());

    let spec: TrainSpec = serde_json::from_str(
        r#"{"hidden": [16], "learning_rate": 0.01, "epochs": 40, "batch_size": 32, "seed": 0, "loss": "cross_entropy"}"#,
    )
    .map_err(|e| shear_bench::Error::Config(e.to_string()))?;
    let labels = data.labels.clone().expect("label column present");
    let model = train_model(&data.table, labels, &spec)?;

    let reference = reference_for(&data.table.rows, &data.groups, RefPolicy::Mode)?;
    let vf = ValueFunction::new(&model, &data.groups, data.table.rows[1].clone(), reference.values)?;
    let phi = exact_shapley(&vf)?;
    for (name, v) in data.groups.names().zip(&phi.phi) {
        println!("{name:>8} {v:+.5}");
    }
    Ok(())
}

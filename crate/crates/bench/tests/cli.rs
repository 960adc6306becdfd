use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn shear(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shear")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn end_to_end_through_every_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let fx = dir.path().join("fx");
    let o = shear(&["fixture", "--kind", "quadratic", "--m", "5", "--seed", "1", "--out", s(&fx)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let binding = [
        "--model", s(&fx.join("model.json")).to_string().leak(),
        "--data", s(&fx.join("test.csv")).to_string().leak(),
        "--label", "label",
        "--reference", s(&fx.join("reference.json")).to_string().leak(),
        "--limit", "12",
    ];
    let oracle = dir.path().join("oracle.csv");
    let mut args = vec!["oracle"];
    args.extend(binding);
    args.extend(["--out", s(&oracle)]);
    assert_eq!(code(&shear(&args)), 0);

    let attributions = dir.path().join("shear.csv");
    let mut args = vec!["explain"];
    args.extend(binding);
    args.extend(["--method", "shear", "--n", "32", "--out", s(&attributions)]);
    assert_eq!(code(&shear(&args)), 0);
    assert_eq!(fs::read_to_string(&attributions).unwrap().lines().count(), 13);

    let report = dir.path().join("report");
    let mut args = vec!["report"];
    args.extend(binding);
    args.extend(["--attributions", s(&attributions), "--oracle", s(&oracle), "--out-dir", s(&report)]);
    let o = shear(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    // N = 2^M makes shear exact
    let metrics = fs::read_to_string(report.join("metrics.csv")).unwrap();
    for line in metrics.lines().skip(1) {
        let ae: f64 = line.split(',').nth(5).unwrap().parse().unwrap();
        assert!(ae < 1e-9, "{line}");
    }

    let cfg = dir.path().join("bench.json");
    fs::write(
        &cfg,
        r#"{"dataset": "fx/train.csv", "instances": "fx/test.csv", "label_column": "label",
            "model": {"path": "fx/model.json"}, "methods": ["shear", "aps"], "budgets": [8],
            "instance_limit": 10, "output_dir": "out"}"#,
    )
    .unwrap();
    assert_eq!(code(&shear(&["bench", "--config", s(&cfg)])), 0);
    for f in ["attributions.csv", "oracle.csv", "metrics.csv", "aggregate.csv", "cells.csv", "throughput.csv", "manifest.json"] {
        assert!(dir.path().join("out").join(f).exists(), "{f}");
    }

    let train_out = dir.path().join("trained.json");
    let o = shear(&[
        "train", "--data", s(&fx.join("train.csv")), "--label", "label", "--hidden", "8", "--loss", "squared_error",
        "--epochs", "3", "--learning-rate", "0.01", "--batch-size", "32", "--out", s(&train_out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(train_out.exists());
}

#[test]
fn exit_codes_separate_config_from_runtime_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&shear(&["--help"])), 0);
    assert_eq!(code(&shear(&["frobnicate"])), 1);
    assert_eq!(code(&shear(&["bench", "--config", s(&dir.path().join("missing.json"))])), 1);

    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"dataset": "x.csv", "model": {"path": "m.json"}, "methods": ["shear"], "budgets": [12], "output_dir": "o"}"#).unwrap();
    assert_eq!(code(&shear(&["bench", "--config", s(&cfg)])), 1);
    assert_eq!(code(&shear(&["fixture", "--kind", "affine", "--m", "40", "--out", s(dir.path())])), 1);

    let fx = dir.path().join("fx");
    assert_eq!(code(&shear(&["fixture", "--kind", "affine", "--m", "3", "--out", s(&fx)])), 0);
    let o = shear(&[
        "train", "--data", s(&fx.join("train.csv")), "--label", "label", "--hidden", "4", "--loss", "squared_error",
        "--epochs", "2", "--learning-rate", "1e300", "--out", s(&dir.path().join("m.json")),
    ]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

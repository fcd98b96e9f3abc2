use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn oilcast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oilcast"))
        .args(args)
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    dir: tempfile::TempDir,
    data: PathBuf,
    schema: PathBuf,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let schema = dir.path().join("s.json");
    let out = oilcast(&[
        "synth",
        "--out",
        s(&data),
        "--schema-out",
        s(&schema),
        "--rows",
        "80",
        "--train-rows",
        "64",
        "--inputs",
        "4",
    ]);
    assert!(out.status.success());
    Fixture { dir, data, schema }
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(oilcast(&[]).status.code(), Some(2));
    assert_eq!(oilcast(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        oilcast(&["acf", "--data", "x.csv", "--diff", "3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(oilcast(&["--help"]).status.code(), Some(0));
}

#[test]
fn domain_errors_exit_1() {
    let f = fixture();
    let a = f.dir.path().join("a.txt");
    fs::write(&a, "error\n0.5\n-1.0\n2.0\n0.25\n").unwrap();
    let out = oilcast(&["dm", "--errors-a", s(&a), "--errors-b", s(&a), "--h", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("loss differential"));

    let out = oilcast(&["ingest", "--data", s(&f.data)]);
    assert_eq!(
        out.status.code(),
        Some(1),
        "default schema should not match synthetic columns"
    );
    let out = oilcast(&["ingest", "--data", "/nonexistent.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn dm_reports_json() {
    let f = fixture();
    let a = f.dir.path().join("a.txt");
    let b = f.dir.path().join("b.txt");
    fs::write(&a, "1\n1\n1\n1.5\n1.5\n1.5\n").unwrap();
    fs::write(&b, "0\n0\n0\n0.5\n0.5\n0.5\n").unwrap();
    let out = oilcast(&["dm", "--errors-a", s(&a), "--errors-b", s(&b)]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["statistic"].as_f64().unwrap() - 6.708203932499369).abs() < 1e-10);
    assert_eq!(v["n"], 6);
}

#[test]
fn ingest_corr_and_acf() {
    let f = fixture();
    let out = oilcast(&["ingest", "--data", s(&f.data), "--schema", s(&f.schema)]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("rows: 80"));

    let corr = f.dir.path().join("corr.csv");
    let out = oilcast(&[
        "corr",
        "--data",
        s(&f.data),
        "--schema",
        s(&f.schema),
        "--out",
        s(&corr),
    ]);
    assert!(out.status.success());
    assert_eq!(fs::read_to_string(&corr).unwrap().lines().count(), 6);

    let out = oilcast(&[
        "acf",
        "--data",
        s(&f.data),
        "--schema",
        s(&f.schema),
        "--diff",
        "1",
        "--max-lag",
        "10",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "lag,acf,pacf,conf_limit");
    assert_eq!(lines.len(), 12);
    assert!(lines[1].starts_with("0,1.0,1.0,"));
}

#[test]
fn train_forecast_evaluate_round_trip() {
    let f = fixture();
    let data = ["--data", s(&f.data), "--schema", s(&f.schema)];
    for (model, extra) in [
        ("ridge", vec!["--lambda", "0"]),
        ("nn", vec!["--lr", "0.01", "--epochs", "20"]),
        ("arima", vec!["--order", "1,1,0"]),
    ] {
        let file = f.dir.path().join(format!("{model}.json"));
        let mut args = vec![
            "train",
            "--model",
            model,
            "--split",
            "1991-05",
            "--out",
            s(&file),
        ];
        args.extend(data);
        args.extend(extra);
        let out = oilcast(&args);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(report["sample_kind"], "in_sample");

        let preds = f.dir.path().join(format!("{model}_pred.csv"));
        let mut args = vec!["forecast", "--model-file", s(&file), "--out", s(&preds)];
        if model != "arima" {
            args.extend(data);
            args.extend(["--split", "1991-05"]);
        }
        let out = oilcast(&args);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let text = fs::read_to_string(&preds).unwrap();
        assert_eq!(text.lines().count(), 17);
        assert!(text.lines().nth(1).unwrap().starts_with("1991-05,"));

        if model == "ridge" {
            let out = oilcast(&["evaluate", "--predictions", s(&preds)]);
            assert!(out.status.success());
            let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
            assert!((v["r2"].as_f64().unwrap() - 1.0).abs() < 1e-9);
        }
    }
    let bogus = f.dir.path().join("bogus.json");
    fs::write(&bogus, r#"{"kind": "nn", "model": {}}"#).unwrap();
    assert_eq!(
        oilcast(&["forecast", "--model-file", s(&bogus)])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn grid_from_spec() {
    let f = fixture();
    let spec = f.dir.path().join("grid.json");
    fs::write(
        &spec,
        r#"{"nn": [{"learning_rate": 0.01, "epochs": 5}], "lambdas": [0.0, 0.5],
            "arima": [[1, 1, 0]], "timing_repetitions": 2, "seed": 4}"#,
    )
    .unwrap();
    let out_dir = f.dir.path().join("out");
    let out = oilcast(&[
        "grid",
        "--spec",
        s(&spec),
        "--data",
        s(&f.data),
        "--schema",
        s(&f.schema),
        "--out",
        s(&out_dir),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let grid = fs::read_to_string(out_dir.join("grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 5);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["cells"], 4);
    for file in manifest["files"].as_array().unwrap() {
        assert!(out_dir.join(file.as_str().unwrap()).exists());
    }
}

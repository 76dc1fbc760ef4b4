use std::path::Path;
use std::process::{Command, Output};

use ldchain::curve::CURVE_SCHEMA;

fn ldchain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ldchain")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// `(lambda, value)` pairs from a curve CSV.
fn curve_values(path: &Path) -> Vec<(f64, f64)> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[1].parse().unwrap())
        })
        .collect()
}

#[test]
fn kappa_prints_table_and_summary() {
    let out = ldchain(&["kappa"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("method,omega0,omega,gamma,kappa\n"), "{text}");
    let kappa: f64 = text.lines().nth(1).unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert!((kappa - (3.0 - 5f64.sqrt()) / 4.0).abs() < 1e-12);
}

#[test]
fn simulate_is_reproducible_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let path = dir.path().join(name);
        let out = ldchain(&[
            "simulate", "--n", "3", "--tau", "0.1", "--seed", seed, "--dt", "0.01", "--t-sample", "5", "--replicas", "3",
            "--output", path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(path).unwrap()
    };
    let first = run("a.csv", "7");
    assert_eq!(first, run("b.csv", "7"));
    assert_ne!(first, run("c.csv", "8"));
}

#[test]
fn gaussian_and_riccati_curves_agree() {
    let dir = tempfile::tempdir().unwrap();
    let curve = |cmd: &str| {
        let path = dir.path().join(format!("{cmd}.csv"));
        let out = ldchain(&[cmd, "--n", "5", "--tau", "0.05", "--lambda=-0.08,-0.03,0.01,0.04", "--output", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        curve_values(&path)
    };
    let (gaussian, riccati) = (curve("scgf-gaussian"), curve("scgf-riccati"));
    assert_eq!(gaussian.len(), 4);
    for ((lg, fg), (lr, fr)) in gaussian.iter().zip(&riccati) {
        assert_eq!(lg, lr);
        assert!((fg - fr).abs() <= 1e-8 * fr.abs(), "{lg}: {fg} vs {fr}");
    }
}

#[test]
fn json_outputs_match_schema() {
    let dir = tempfile::tempdir().unwrap();
    let rate = dir.path().join("rate.csv");
    let scgf = dir.path().join("scgf.json");
    let runs = [
        vec!["rate", "--n", "3", "--source", "limit", "--j=-0.2,0,0.2", "--output", rate.to_str().unwrap()],
        vec!["scgf-riccati", "--n", "3", "--lambda=-0.1,0.1", "--format", "json", "--output", scgf.to_str().unwrap()],
    ];
    for args in &runs {
        let out = ldchain(args);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let schema: serde_json::Value = serde_json::from_str(CURVE_SCHEMA).unwrap();
    let validator = jsonschema::JSONSchema::compile(&schema).unwrap();
    for file in [rate.with_extension("json"), scgf] {
        let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&file).unwrap()).unwrap();
        assert!(validator.is_valid(&doc), "{}: {doc}", file.display());
    }
}

#[test]
fn invalid_input_exits_one() {
    assert_eq!(ldchain(&["simulate", "--n", "3"]).status.code(), Some(1), "missing seed");
    assert_eq!(ldchain(&["kappa", "--bogus"]).status.code(), Some(1));
    assert_eq!(ldchain(&["scgf-riccati", "--lambda=0.1,0.0"]).status.code(), Some(1), "unsorted grid");

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"scgf": {"lambda_grid": [0.1]}, "gc": {"bins": 10}}"#).unwrap();
    assert_eq!(ldchain(&["scgf-riccati", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));

    let threads = Command::new(env!("CARGO_BIN_EXE_ldchain")).arg("kappa").env("LDCHAIN_THREADS", "zero").output().unwrap();
    assert_eq!(threads.status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_two() {
    let out = ldchain(&["scgf-riccati", "--n", "3", "--lambda", "5"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

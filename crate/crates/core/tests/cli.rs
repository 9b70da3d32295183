use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn kobharm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kobharm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn registry_lists_every_domain() {
    let out = kobharm(&["registry"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let keys: Vec<&str> = v.as_array().unwrap().iter().map(|e| e["key"].as_str().unwrap()).collect();
    assert_eq!(keys, ["euclidean-ball", "euclidean-disc", "perturbed-ball", "geodesic-ball", "hyperbolic-ball"]);
}

#[test]
fn mpsh_check_writes_the_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m");
    let res = kobharm(&["--quiet", "--out", out.to_str().unwrap(), "mpsh-check"]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stdout));
    for f in ["results.csv", "ledger.json", "report.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["status"], 0);
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    let first = csv.lines().next().unwrap();
    assert!(first.starts_with("# config_hash=") && first.contains(report["config_hash"].as_str().unwrap()));
}

#[test]
fn config_errors_exit_2_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"parameters": {"spacing": 0.1, "bogus": 1}}"#).unwrap();
    let out = dir.path().join("o");
    let res = kobharm(&["--quiet", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "mpsh-check"]);
    assert_eq!(res.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(err["kind"], "config");
    assert!(out.join("error.json").exists());

    fs::write(&cfg, r#"{"experiment": "distance"}"#).unwrap();
    let res = kobharm(&["--quiet", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "mpsh-check"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn fixed_seed_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scan.json");
    fs::write(&cfg, r#"{"name": "scan", "parameters": {"deltas": [0.1, 0.01, 0.001, 0.0001]}}"#).unwrap();
    let mut runs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("r{k}"));
        let res = kobharm(&[
            "--quiet",
            "--seed",
            "7",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "boundary-scan",
        ]);
        assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stdout));
        runs.push((fs::read(out.join("results.csv")).unwrap(), fs::read(out.join("report.json")).unwrap()));
    }
    assert_eq!(runs[0], runs[1]);
    let report: Value = serde_json::from_slice(&runs[0].1).unwrap();
    assert_eq!(report["seed"], 7);
}

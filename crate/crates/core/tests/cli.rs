use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn conforma(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conforma"))
        .arg("--output-dir")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn result(dir: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(dir.join("result.json")).unwrap()).unwrap()
}

fn check(doc: &Value, name: &str) -> f64 {
    doc["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap()["value"].as_f64().unwrap()
}

#[test]
fn radial_example() {
    let tmp = tempfile::tempdir().unwrap();
    let out = conforma(tmp.path(), &["radial-shoot", "--n", "3", "--k", "1", "--v0", "1", "--h", "1e-4"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = result(tmp.path());
    assert_eq!(doc["pass"], true);
    assert!(doc["data"]["sup_error"].as_f64().unwrap() <= 1e-6);
    let manifest: Value = serde_json::from_slice(&std::fs::read(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 0);
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert!(manifest["elapsed_seconds"].as_f64().unwrap() >= 0.0);
    assert!(!tmp.path().join("profile.csv").exists());
}

#[test]
fn homogenize_example() {
    let tmp = tempfile::tempdir().unwrap();
    let out = conforma(tmp.path(), &["homogenize", "--op", "sigma2", "--samples", "100"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(check(&result(tmp.path()), "gap_to_closed_form") <= 1e-10);
}

#[test]
fn unknown_command_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("out");
    let out = conforma(&dir, &["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.exists());
}

#[test]
fn domain_error_is_usage() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("out");
    let out = conforma(&dir, &["harnack", "--n", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.exists());
    let out = conforma(&dir, &["validate-operator", "--op", "sigma9-root", "--n", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.exists());
}

#[test]
fn failing_check_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let out = conforma(tmp.path(), &["radial-shoot", "--h", "5e-4", "--tol", "1e-300"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sup_error"));
    let doc = result(tmp.path());
    assert_eq!(doc["pass"], false);
}

#[test]
fn csv_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = conforma(tmp.path(), &["--format", "both", "radial-shoot", "--h", "5e-4"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(tmp.path().join("profile.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("r,v,vp,vpp"));

    let out = conforma(tmp.path(), &["--format", "csv", "solve-yamabe", "--nodes", "32"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(tmp.path().join("solution.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t_node,u"));
    assert_eq!(csv.lines().count(), 33);
    let trace = std::fs::read_to_string(tmp.path().join("trace.jsonl")).unwrap();
    let first: Value = serde_json::from_str(trace.lines().next().unwrap()).unwrap();
    for key in ["t", "iter", "residual_inf", "step_norm", "min_cone_margin"] {
        assert!(first.get(key).is_some(), "{key}");
    }
}

#[test]
fn sweep_csv_on_request() {
    let tmp = tempfile::tempdir().unwrap();
    let out = conforma(tmp.path(), &["--emit-sweep-csv", "moving-sphere", "--betas", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(tmp.path().join("sweep_beta_1.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x0,x1,x2,lambda_bar,alpha"));
    assert_eq!(csv.lines().count(), 10);
}

#[test]
fn spec_file_matches_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("spec.json");
    let via_spec = tmp.path().join("a");
    std::fs::write(
        &spec,
        serde_json::json!({
            "command": "conjugation-test",
            "params": {"n": 3, "words": 4, "points": 3},
            "seed": 9,
            "output_dir": via_spec,
        })
        .to_string(),
    )
    .unwrap();
    let out = conforma(tmp.path(), &["run", "--spec", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let via_flags = tmp.path().join("b");
    let out = conforma(&via_flags, &["--seed", "9", "conjugation-test", "--n", "3", "--words", "4", "--points", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read(via_spec.join("result.json")).unwrap(), std::fs::read(via_flags.join("result.json")).unwrap());
}

#[test]
fn bad_specs_are_usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("spec.json");
    let dir = tmp.path().join("out");
    for body in [
        serde_json::json!({"command": "nope", "params": {}}),
        serde_json::json!({"command": "harnack", "params": {"bogus": 1}}),
        serde_json::json!({"command": "harnack", "params": {"n": "three"}}),
        serde_json::json!({"command": "harnack", "extra": true}),
    ] {
        std::fs::write(&spec, body.to_string()).unwrap();
        let mut args = vec!["run", "--spec", spec.to_str().unwrap()];
        args.insert(0, "--seed");
        args.insert(1, "1");
        let out = conforma(&dir, &args);
        assert_eq!(out.status.code(), Some(2), "{body}");
        assert!(!dir.exists());
    }
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        let out = conforma(d, &["--seed", "5", "moving-sphere", "--suite", "gradient-lemma", "--h-functions", "10"]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(a.join("result.json")).unwrap(), std::fs::read(b.join("result.json")).unwrap());
}

#[test]
fn help_and_version_exit_zero() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(conforma(tmp.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(conforma(tmp.path(), &["--version"]).status.code(), Some(0));
}

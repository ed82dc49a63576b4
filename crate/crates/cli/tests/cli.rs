//! End-to-end runs of the `ske` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ske"))
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.json");
    std::fs::write(&path, body).unwrap();
    path
}

fn small(lambda: f64, extra: &str) -> String {
    format!(
        r#"{{"model": {{"j": 1.0, "lambda": {lambda}, "modes": [{{"omega": 1.0, "g": 1.0}}], "n_max": 1}}{extra}}}"#
    )
}

fn run(args: &[&str], config: &Path) -> Output {
    bin()
        .args(args)
        .arg("--config")
        .arg(config)
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn spectrum_of_smallest_instance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small(0.0, ""));
    let v = json(&run(&["spectrum"], &cfg));
    let rows = v["tables"]["levels"].as_array().unwrap();
    assert_eq!(rows.len(), 8);
    let singlet = rows.iter().find(|r| r["nu"] == "(4,0)").unwrap();
    assert_eq!(singlet["e0"], Value::from(-0.75));
    assert_eq!(singlet["eigenvalue"], Value::from(-0.75));
    assert!(v["header"]["tolerances"]["cluster_gap"].is_number());
}

#[test]
fn zero_coupling_needs_no_correction() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small(0.0, ""));
    let v = json(&run(&["correct"], &cfg));
    assert_eq!(v["results"]["uniform"], Value::Bool(true));
    for row in v["tables"]["shifts"].as_array().unwrap() {
        assert_eq!(row["delta_t"], Value::from(0.0));
    }
}

#[test]
fn df_check_on_constructed_couplings() {
    let out = run(&[], &configs().join("bv_chain.json"));
    let v = json(&out);
    assert_eq!(v["command"], "df-check");
    assert!(
        v["results"]["residual_bath_constraint_abs"]
            .as_f64()
            .unwrap()
            < 1e-12
    );
    let holds: Vec<bool> = v["tables"]["ratios"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["holds"].as_bool().unwrap())
        .collect();
    assert_eq!(holds, vec![true]);
}

#[test]
fn csv_output_carries_tolerance_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small(0.05, ""));
    let out_path = dir.path().join("t.csv");
    let out = run(
        &[
            "triangulate",
            "--format",
            "csv",
            "--out",
            out_path.to_str().unwrap(),
            "--branch",
            "minus",
        ],
        &cfg,
    );
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.starts_with("# command,triangulate\n"));
    assert!(text.contains("# tolerance.hermitian,1e-12\n"));
    assert!(text.contains("# branch,minus\n"));
    assert!(text.contains("# table,blocks\n"));
}

#[test]
fn order_flag_reaches_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small(0.05, r#", "order": "exact""#));
    let v = json(&run(&["subdyn", "--order", "order1"], &cfg));
    assert_eq!(v["results"]["order"], "order1");
    assert_eq!(v["header"]["order"], "order1");
}

#[test]
fn sweep_over_lambda_and_cutoff() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small(0.05, ""));
    let v = json(&run(
        &["sweep", "spectrum", "--sweep", "lambda=0.0:0.1:3"],
        &cfg,
    ));
    let results = v["tables"]["results"].as_array().unwrap();
    assert_eq!(results.len(), 3);
    assert_eq!(results[2]["lambda"], Value::from(0.1));
    let v = json(&run(&["spectrum", "--sweep", "n_max=1:3:3"], &cfg));
    let dims: Vec<i64> = v["tables"]["results"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["dim"].as_i64().unwrap())
        .collect();
    assert_eq!(dims, vec![8, 12, 16]);
}

#[test]
fn schema_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small(0.05, r#", "lamda": 0.1"#));
    let out = run(&["spectrum"], &cfg);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown field"));
    let out = run(&["spectrum"], &dir.path().join("missing.json"));
    assert_eq!(out.status.code(), Some(1));
    let cfg = write_config(dir.path(), &small(0.05, ""));
    let out = run(&["spectrum", "--sweep", "omega=1:2:2"], &cfg);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn capacity_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small(0.05, ""));
    let out = bin()
        .arg("spectrum")
        .arg("--config")
        .arg(&cfg)
        .env("SUBDYN_MAX_DIM", "4")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("capacity 4"));
    let out = bin()
        .arg("liouville")
        .arg("--config")
        .arg(configs().join("reference.json"))
        .env("SUBDYN_MAX_DIM", "1000")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn singularities_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let body = small(0.05, "").replace(r#""j": 1.0"#, r#""j": 0.0"#);
    let cfg = write_config(dir.path(), &body);
    let out = run(&["gates"], &cfg);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("never reaches"));
}

#[test]
fn complex_coupling_is_rejected_by_triangulation() {
    let dir = tempfile::tempdir().unwrap();
    let body = small(0.05, "").replace(r#""g": 1.0"#, r#""g": {"re": 1.0, "im": 0.5}"#);
    let cfg = write_config(dir.path(), &body);
    let out = run(&["triangulate"], &cfg);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("real coupling"));
}

#[test]
fn fidelity_report_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &small(
            0.05,
            r#", "fidelity": {"samples": 5, "seed": 3, "time": 2.0}"#,
        ),
    );
    let a = run(&["fidelity"], &cfg);
    let b = run(&["fidelity"], &cfg);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["tables"]["samples"].as_array().unwrap().len(), 5);
    assert!(v["results"]["max_projected_deviation"].as_f64().unwrap() < 1e-10);
}

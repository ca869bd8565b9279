use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::{json, Value};
use tempfile::TempDir;

fn qdisc(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_qdisc"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn qdisc");
    if let Some(input) = stdin {
        child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    }
    drop(child.stdin.take());
    child.wait_with_output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &TempDir, name: &str, value: &Value) -> String {
    let p = dir.path().join(name);
    fs::write(&p, value.to_string()).unwrap();
    path_str(&p).to_owned()
}

fn real(rows: &[&[f64]]) -> Value {
    json!(rows.iter().map(|r| r.iter().map(|&x| json!([x, 0.0])).collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn orthogonal_pair() -> Value {
    json!({
        "dim": 2,
        "states": [
            { "prior": 0.5, "rho": real(&[&[1.0, 0.0], &[0.0, 0.0]]) },
            { "prior": 0.5, "rho": real(&[&[0.0, 0.0], &[0.0, 1.0]]) },
        ]
    })
}

#[test]
fn gen_lsm_check_vnm_pipeline() {
    let dir = TempDir::new().unwrap();
    let gen = qdisc(
        &["gen", "--dim", "2", "--ranks", "1,1", "--priors", "uniform", "--seed", "1", "--independent"],
        None,
    );
    assert!(gen.status.success());
    let ens = String::from_utf8(gen.stdout).unwrap();
    let ens_path = dir.path().join("ens.json");
    fs::write(&ens_path, &ens).unwrap();

    let lsm = qdisc(&["lsm", "-"], Some(&ens));
    assert!(lsm.status.success());
    let povm_path = dir.path().join("povm.json");
    fs::write(&povm_path, &lsm.stdout).unwrap();

    let check = qdisc(&["check-vnm", path_str(&ens_path), path_str(&povm_path)], None);
    assert_eq!(check.status.code(), Some(0));
    assert_eq!(stdout_json(&check)["is_von_neumann"], json!(true));
}

#[test]
fn pd_of_orthogonal_pair_is_one() {
    let dir = TempDir::new().unwrap();
    let ens = write(&dir, "ens.json", &orthogonal_pair());
    let povm = write(
        &dir,
        "povm.json",
        &json!({ "dim": 2, "operators": [real(&[&[1.0, 0.0], &[0.0, 0.0]]), real(&[&[0.0, 0.0], &[0.0, 1.0]])] }),
    );
    let out = qdisc(&["pd", &ens, &povm], None);
    assert!(out.status.success());
    assert_eq!(stdout_json(&out)["pd"].as_f64(), Some(1.0));
}

#[test]
fn certify_with_zero_dual_is_infeasible() {
    let dir = TempDir::new().unwrap();
    let ens = write(&dir, "ens.json", &orthogonal_pair());
    let lsm = qdisc(&["lsm", &ens], None);
    let povm = dir.path().join("povm.json");
    fs::write(&povm, &lsm.stdout).unwrap();
    let cert = write(&dir, "cert.json", &json!({ "x_hat": real(&[&[0.0, 0.0], &[0.0, 0.0]]) }));

    let out = qdisc(&["certify", &ens, path_str(&povm), &cert], None);
    assert_eq!(out.status.code(), Some(1));
    let report = stdout_json(&out);
    assert_eq!(report["feasible"], json!(false));
    assert!(report["feas_margins"].as_array().unwrap().iter().all(|m| m.as_f64().unwrap() < 0.0));
}

#[test]
fn solve_then_certify_is_self_consistent() {
    let dir = TempDir::new().unwrap();
    let gen = qdisc(&["gen", "--dim", "3", "--ranks", "2,2", "--priors", "random", "--seed", "9"], None);
    assert!(gen.status.success());
    let ens = dir.path().join("ens.json");
    fs::write(&ens, &gen.stdout).unwrap();
    let povm = dir.path().join("povm.json");
    let cert = dir.path().join("cert.json");

    let solve = qdisc(
        &["solve", path_str(&ens), "--tol", "1e-8", "--out", path_str(&povm), "--cert", path_str(&cert)],
        None,
    );
    assert_eq!(solve.status.code(), Some(0));
    let solution = stdout_json(&solve);
    assert_eq!(solution["diagnostics"]["converged"], json!(true));

    let out = qdisc(&["certify", path_str(&ens), path_str(&povm), path_str(&cert), "--tol", "1e-8"], None);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["feasible"], json!(true));
    assert_eq!(report["slack"], json!(true));

    let pd = stdout_json(&qdisc(&["pd", path_str(&ens), path_str(&povm)], None))["pd"].as_f64().unwrap();
    assert!((pd - solution["diagnostics"]["primal_value"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn outputs_round_trip_through_readers() {
    let dir = TempDir::new().unwrap();
    let gen = qdisc(&["gen", "--dim", "3", "--ranks", "1,2", "--seed", "4", "--independent"], None);
    let first = String::from_utf8(gen.stdout).unwrap();
    let validate = qdisc(&["validate", "-"], Some(&first));
    assert_eq!(validate.status.code(), Some(0));
    assert_eq!(stdout_json(&validate)["pass"], json!(true));

    let ens = dir.path().join("ens.json");
    fs::write(&ens, &first).unwrap();
    let lsm = qdisc(&["lsm", path_str(&ens)], None);
    let povm = dir.path().join("povm.json");
    fs::write(&povm, &lsm.stdout).unwrap();
    let sim = qdisc(&["simulate", path_str(&ens), path_str(&povm), "--trials", "2000", "--seed", "5"], None);
    assert!(sim.status.success());
    let sim = stdout_json(&sim);
    let total: u64 = sim["counts"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|row| row.as_array().unwrap().iter().map(|c| c.as_u64().unwrap()))
        .sum();
    assert_eq!(total, 2000);
}

#[test]
fn malformed_input_exits_two() {
    let out = qdisc(&["validate", "-"], Some("{ not json"));
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert_eq!(String::from_utf8(out.stderr).unwrap().trim().lines().count(), 1);

    let out = qdisc(&["frobnicate"], None);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(String::from_utf8(out.stderr).unwrap().trim().lines().count(), 1);

    let out = qdisc(&["gen", "--dim", "2", "--ranks", "3", "--seed", "1"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_ensemble_is_a_domain_failure() {
    let bad = json!({
        "dim": 2,
        "states": [
            { "prior": 0.7, "rho": real(&[&[1.0, 0.0], &[0.0, 0.0]]) },
            { "prior": 0.7, "rho": real(&[&[0.0, 0.0], &[0.0, 1.0]]) },
        ]
    });
    let out = qdisc(&["validate", "-"], Some(&bad.to_string()));
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["pass"], json!(false));

    let out = qdisc(&["lsm", "-"], Some(&bad.to_string()));
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout_json(&out)["error"].is_string());
}

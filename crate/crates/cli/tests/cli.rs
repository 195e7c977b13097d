use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn npgrover(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_npgrover"))
        .args(args)
        .current_dir(dir)
        .env_remove("NPGROVER_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = npgrover(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn gen(dir: &Path, name: &str, n: &str, k: &str, count: &str, postselect: &str) {
    ok(dir, &["gen", "--n", n, "--k", k, "--count", count, "--seed", "1", "--postselect", postselect, "--out", name]);
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let summary = ok(dir.path(), &["gen", "--n", "8", "--k", "8", "--count", "10", "--seed", "1", "--out", "a.jsonl"]);
    assert_eq!(summary.lines().count(), 1);
    ok(dir.path(), &["gen", "--n", "8", "--k", "8", "--count", "10", "--seed", "1", "--out", "b.jsonl"]);
    let a = fs::read_to_string(dir.path().join("a.jsonl")).unwrap();
    assert_eq!(a, fs::read_to_string(dir.path().join("b.jsonl")).unwrap());
    assert_eq!(a.lines().count(), 10);
    for line in a.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["n"], 8);
        assert_eq!(v["weights"].as_array().unwrap().len(), 8);
    }
    // No temporary files left behind.
    let mut names: Vec<String> =
        fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["a.jsonl", "a.jsonl.manifest.json", "b.jsonl", "b.jsonl.manifest.json"]);
}

#[test]
fn run_writes_every_iteration() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "i.jsonl", "8", "8", "10", "none");
    ok(dir.path(), &["run", "--instances", "i.jsonl", "--gamma", "2e-3", "--rho", "inf", "--tmax", "64", "--out", "t.csv"]);
    let csv = fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("instance_id,T,P_T,norm"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 10 * 65);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[0], (i / 65).to_string());
        assert_eq!(row[1], (i % 65).to_string());
        let norm: f64 = row[3].parse().unwrap();
        assert!((norm - 1.0).abs() < 1e-12);
    }
}

#[test]
fn run_resolves_step_width_and_decay() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "i.jsonl", "8", "12", "4", "none");
    ok(dir.path(), &["run", "--instances", "i.jsonl", "--gamma-rule", "crit", "--tmax", "3", "--out", "t.csv"]);
    let m: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("t.csv.manifest.json")).unwrap()).unwrap();
    let gamma = m["config"]["oracle"]["gamma"].as_f64().unwrap();
    assert!((gamma.log2() + 6.9667).abs() < 1e-3, "{gamma}");

    ok(dir.path(), &["run", "--instances", "i.jsonl", "--gamma", "0.01", "--rho", "1000", "--tmax", "3", "--out", "u.csv"]);
    let m: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("u.csv.manifest.json")).unwrap()).unwrap();
    assert!((m["config"]["oracle"]["r"].as_f64().unwrap() - 0.1).abs() < 1e-15);
}

#[test]
fn analyze_critical_depth() {
    let dir = tempfile::tempdir().unwrap();
    let line = ok(dir.path(), &["analyze", "--formula", "kc", "--n", "8"]);
    let value: f64 = line.trim().rsplit(" = ").next().unwrap().parse().unwrap();
    assert!((value - 6.966_733).abs() < 1e-6, "{line}");

    ok(dir.path(), &["analyze", "--formula", "gamma-c", "--n", "6,8", "--k", "4,8,12", "--out", "g.csv"]);
    let csv = fs::read_to_string(dir.path().join("g.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
    assert!(csv.starts_with("n,k,gamma_c,log2_gamma_c\n6,4,"));
}

#[test]
fn flag_errors_exit_2_with_usage() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "i.jsonl", "6", "6", "2", "none");
    let cases: [&[&str]; 5] = [
        &["run", "--instances", "i.jsonl", "--gamma", "0.01", "--rho", "1000", "--r", "0.2", "--tmax", "3"],
        &["run", "--instances", "i.jsonl", "--tmax", "3"],
        &["gen", "--n", "30", "--k", "8", "--count", "1", "--seed", "1"],
        &["gen", "--n", "8"],
        &["analyze", "--formula", "nope"],
    ];
    for args in cases {
        let out = npgrover(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains("Usage"), "{args:?}: {err}");
    }
    let out = npgrover(dir.path(), cases[0]);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--r") && err.contains("--rho"), "{err}");
}

#[test]
fn runtime_errors_exit_1_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = npgrover(dir.path(), &["run", "--instances", "missing.jsonl", "--gamma", "0.01", "--out", "t.csv"]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(err["error"]["kind"], "io");
    assert!(!dir.path().join("t.csv").exists());
}

fn rerun_from_manifest(dir: &Path, out: &str) {
    let before = fs::read(dir.join(out)).unwrap();
    let manifest_name = format!("{out}.manifest.json");
    let manifest_before = fs::read(dir.join(&manifest_name)).unwrap();
    let m: Value = serde_json::from_slice(&manifest_before).unwrap();
    let argv: Vec<&str> = m["argv"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    fs::remove_file(dir.join(out)).unwrap();
    ok(dir, &argv);
    assert_eq!(fs::read(dir.join(out)).unwrap(), before, "{out}");
    assert_eq!(fs::read(dir.join(&manifest_name)).unwrap(), manifest_before);
}

#[test]
fn outputs_regenerate_from_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen(d, "i.jsonl", "7", "7", "12", "any");
    rerun_from_manifest(d, "i.jsonl");
    ok(d, &["run", "--instances", "i.jsonl", "--gamma-rule", "power-k", "--rho", "300", "--out", "t.csv"]);
    rerun_from_manifest(d, "t.csv");
    ok(d, &["recursive", "--instances", "i.jsonl", "--m", "3", "--out", "rec.csv"]);
    rerun_from_manifest(d, "rec.csv");
    fs::write(
        d.join("grid.json"),
        r#"{"family": "grid", "points": [{"n": 5, "k": 5}, {"n": 6, "k": 4}],
            "gamma_rule": {"rule": "optimize", "objective": "min_median_total"},
            "algorithm": {"kind": "standard"}, "count": 12, "seed": 9, "postselect": "has_solution"}"#,
    )
    .unwrap();
    ok(d, &["sweep", "--spec", "grid.json", "--out", "grid.csv"]);
    rerun_from_manifest(d, "grid.csv");
    let m: Value = serde_json::from_str(&fs::read_to_string(d.join("grid.csv.manifest.json")).unwrap()).unwrap();
    assert!(m["results"]["records"][0]["gamma_search"]["evaluations"].as_array().unwrap().len() > 5);
}

#[test]
fn thread_count_does_not_change_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen(d, "i.jsonl", "8", "8", "16", "any");
    for threads in ["1", "3"] {
        let out = format!("t{threads}.csv");
        ok(d, &["--threads", threads, "run", "--instances", "i.jsonl", "--gamma", "0.004", "--out", &out]);
        let out = format!("r{threads}.csv");
        ok(d, &["recursive", "--threads", threads, "--instances", "i.jsonl", "--m", "4", "--out", &out]);
    }
    for stem in ["t", "r"] {
        let a = fs::read(d.join(format!("{stem}1.csv"))).unwrap();
        assert_eq!(a, fs::read(d.join(format!("{stem}3.csv"))).unwrap());
        let strip = |s: String| s.replace(&format!("{stem}1.csv"), "X").replace(&format!("{stem}3.csv"), "X");
        let m1 = strip(fs::read_to_string(d.join(format!("{stem}1.csv.manifest.json"))).unwrap());
        let m3 = strip(fs::read_to_string(d.join(format!("{stem}3.csv.manifest.json"))).unwrap());
        assert_eq!(m1, m3);
    }
}

#[test]
fn sweep_families_and_classical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("cap.json"), r#"{"family": "capture", "n": 6, "k": 6, "count": 8, "seed": 2, "gammas": [0.05], "settings": {"echo": false}}"#)
        .unwrap();
    ok(d, &["sweep", "--spec", "cap.json", "--out", "cap.csv"]);
    let cap = fs::read_to_string(d.join("cap.csv")).unwrap();
    assert!(cap.starts_with("gamma,T_opt,S_z,P_rel,half_width\n"));
    fs::write(d.join("bad.json"), r#"{"family": "nope"}"#).unwrap();
    assert_eq!(npgrover(d, &["sweep", "--spec", "bad.json"]).status.code(), Some(2));

    ok(d, &["classical", "--n", "8", "--solutions", "1,2", "--quantile", "0.5", "--out", "c.csv"]);
    let c = fs::read_to_string(d.join("c.csv")).unwrap();
    let rows: Vec<&str> = c.lines().collect();
    assert_eq!(rows[0], "N,N_A,memoryless_expected,linear_expected,memoryless_q0.5,linear_q0.5");
    assert!(rows[1].starts_with("256,1,2.5600000000000000e2,1.2850000000000000e2,"));
}

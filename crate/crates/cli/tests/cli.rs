use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn fairmio(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fairmio")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).display().to_string()
}

/// Synthetic CSV (with schema sidecar) in a fresh directory.
fn synth(extra: &[&str]) -> (TempDir, String) {
    let dir = TempDir::new().unwrap();
    let data = path(&dir, "d.csv");
    let mut args = vec!["synth", "--out", &data];
    args.extend_from_slice(extra);
    let o = fairmio(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    (dir, data)
}

fn biased() -> (TempDir, String) {
    synth(&["--n", "400", "--planted-sd", "0.2", "--features", "3", "--fp-bias", "0.8", "--seed", "1"])
}

#[test]
fn audit_recovers_the_planted_conjunction() {
    let (dir, data) = synth(&["--n", "4000", "--planted-sd", "0.3", "--noise-attributes", "2"]);
    let planted = read_json(&PathBuf::from(format!("{data}.planted.json")));
    assert_eq!(planted["description"], "sex = female ∧ race = white");
    for measure in ["sd", "spsf"] {
        let out = path(&dir, &format!("{measure}.json"));
        let o = fairmio(&["audit", "--data", &data, "--measure", measure, "--out", &out]);
        assert_eq!(code(&o), 0);
        let r = read_json(Path::new(&out));
        assert_eq!(r["result"]["description"], planted["description"]);
        assert_eq!(r["result"]["status"], "Optimal");
    }
}

#[test]
fn no_planted_signal_audits_low() {
    let (dir, data) = synth(&["--n", "10000", "--planted-sd", "0"]);
    let out = path(&dir, "a.json");
    assert_eq!(code(&fairmio(&["audit", "--data", &data, "--measure", "sd", "--out", &out])), 0);
    let r = read_json(Path::new(&out));
    assert!(r["result"]["objective"].as_f64().unwrap() < 0.05);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let (dir, data) = biased();
    let run = |name: &str, extra: &[&str]| {
        let out = path(&dir, name);
        let mut args = vec!["train", "--data", &data, "--out", &out];
        args.extend_from_slice(extra);
        assert_eq!(code(&fairmio(&args)), 0);
        (std::fs::read(&out).unwrap(), std::fs::read(format!("{out}.plot.csv")).unwrap())
    };
    let a = run("a.json", &[]);
    let b = run("b.json", &[]);
    let c = run("c.json", &["--sequential"]);
    assert_eq!(a, b);
    assert_eq!(a, c);
    let audit = |name: &str| {
        let out = path(&dir, name);
        assert_eq!(code(&fairmio(&["audit", "--data", &data, "--measure", "spsf", "--out", &out])), 0);
        std::fs::read(&out).unwrap()
    };
    assert_eq!(audit("x.json"), audit("y.json"));
}

#[test]
fn missing_schema_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let data = path(&dir, "plain.csv");
    std::fs::write(&data, "a,y\nu,1\nv,0\n").unwrap();
    let o = fairmio(&["audit", "--data", &data]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("schema"));
    let o = fairmio(&["audit"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn constant_predictions_pass_the_check() {
    let dir = TempDir::new().unwrap();
    let data = path(&dir, "c.csv");
    std::fs::write(&data, "g,h,p,y\na,x,1,1\na,y,1,0\nb,x,1,0\nb,y,1,1\nb,x,1,0\n").unwrap();
    std::fs::write(
        format!("{data}.schema"),
        "column.g = categorical protected\ncolumn.h = categorical protected\ncolumn.p = categorical prediction\ncolumn.y = categorical label\n",
    )
    .unwrap();
    for measure in ["spsf", "fpsf"] {
        let o = fairmio(&["check", "--data", &data, "--measure", measure, "--gamma", "0"]);
        assert_eq!(code(&o), 0);
        let r: Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(r["satisfied"], true);
        assert_eq!(r["predictions"], "prediction column");
    }
}

#[test]
fn loose_gamma_trains_without_cuts() {
    let (dir, data) = biased();
    let out = path(&dir, "t.json");
    let o = fairmio(&["train", "--data", &data, "--gamma", "1", "--out", &out]);
    assert_eq!(code(&o), 0);
    let r = read_json(Path::new(&out));
    assert_eq!(r["cuts"].as_array().unwrap().len(), 0);
    assert_eq!(r["status"], "FairOptimal");
    assert!(r["timings"].is_null());
    let plot = std::fs::read_to_string(format!("{out}.plot.csv")).unwrap();
    assert!(plot.starts_with("iteration,accuracy,violation,cuts\n0,"));
}

#[test]
fn biased_training_is_cut_and_passes_a_post_audit() {
    let (dir, data) = biased();
    let out = path(&dir, "t.json");
    let o = fairmio(&["train", "--data", &data, "--gamma", "0.01", "--out", &out, "--timings"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(Path::new(&out));
    assert_eq!(r["status"], "FairOptimal");
    assert!(!r["cuts"].as_array().unwrap().is_empty());
    assert!(r["timings"]["total_s"].as_f64().is_some());
    assert!(r["metrics"]["train"]["worst_violation"]["fpsf"]["value"].as_f64().unwrap() <= 0.01);

    let o = fairmio(&["check", "--data", &data, "--predictor", &out, "--measure", "fpsf", "--gamma", "0.01"]);
    assert_eq!(code(&o), 0);
    let check: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(check["satisfied"], true);
    let o = fairmio(&["audit", "--data", &data, "--predictor", &out, "--measure", "fpsf"]);
    let audit: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(audit["result"]["objective"].as_f64().unwrap() <= 0.01);
}

#[test]
fn dnf_with_three_clauses() {
    let (dir, data) = synth(&["--n", "300", "--features", "1", "--seed", "2"]);
    let out = path(&dir, "t.json");
    let o = fairmio(&["train", "--data", &data, "--model", "dnf", "--clauses", "3", "--gamma", "1", "--out", &out]);
    assert_eq!(code(&o), 0);
    let r = read_json(Path::new(&out));
    assert_eq!(r["model"]["kind"], "dnf");
    assert_eq!(r["model"]["params"]["clauses"].as_array().unwrap().len(), 3);
    let o = fairmio(&["evaluate", "--data", &data, "--predictor", &out]);
    assert_eq!(code(&o), 0);
    let e: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(e["train"]["balanced_error"], r["balanced_error"]);
}

#[test]
fn held_out_rows_get_their_own_metrics() {
    let (dir, data) = biased();
    let out = path(&dir, "t.json");
    let o = fairmio(&["train", "--data", &data, "--gamma", "1", "--test-fraction", "0.25", "--out", &out]);
    assert_eq!(code(&o), 0);
    let r = read_json(Path::new(&out));
    assert_eq!(r["dataset"]["total_weight"], 300);
    assert!(r["metrics"]["test"]["accuracy"].as_f64().is_some());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let (dir, data) = biased();
    let cfg = path(&dir, "run.conf");
    std::fs::write(&cfg, format!("data = {data}\ngamma = 1\nmeasure = spsf\n")).unwrap();
    let o = fairmio(&["check", "--config", &cfg, "--gamma", "0.5"]);
    assert_eq!(code(&o), 0);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["gamma"], 0.5);
    assert_eq!(r["measure"], "SPSF");
    std::fs::write(&cfg, "gama = 1\n").unwrap();
    assert_eq!(code(&fairmio(&["check", "--config", &cfg])), 2);
}

#[test]
fn infeasible_synthetic_request_fails() {
    let dir = TempDir::new().unwrap();
    let o = fairmio(&["synth", "--out", &path(&dir, "x.csv"), "--planted-sd", "0.7"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("infeasible"));
}

#[test]
fn external_solver_bridge_matches_builtin() {
    let (dir, data) = synth(&["--n", "800", "--planted-sd", "0.25", "--noise-attributes", "1"]);
    let script = dir.path().join("solver.sh");
    std::fs::write(&script, format!("#!/bin/sh\nexec '{}' solve-lp \"$1\" \"$2\"\n", env!("CARGO_BIN_EXE_fairmio"))).unwrap();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        std::fs::set_permissions(&script, std::fs::Permissions::from_mode(0o755)).unwrap();
    }
    let solver = format!("external:{}", script.display());
    let builtin = fairmio(&["audit", "--data", &data, "--measure", "sd", "--method", "milp"]);
    let external = fairmio(&["audit", "--data", &data, "--measure", "sd", "--solver", &solver]);
    assert_eq!(code(&external), 0, "{}", String::from_utf8_lossy(&external.stderr));
    let a: Value = serde_json::from_slice(&builtin.stdout).unwrap();
    let b: Value = serde_json::from_slice(&external.stdout).unwrap();
    assert_eq!(a["result"]["description"], b["result"]["description"]);
    assert_eq!(a["result"]["objective"], b["result"]["objective"]);
    // No proof comes back from an external solver.
    assert_eq!(b["result"]["status"], "Feasible");
}

#[test]
fn time_limits_map_to_exit_codes() {
    let (_dir, data) = biased();
    let o = fairmio(&["audit", "--data", &data, "--method", "milp", "--time-limit", "0"]);
    assert_eq!(code(&o), 3);
    let o = fairmio(&["train", "--data", &data, "--gamma", "0.001", "--oracle-time-limit", "0"]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stdout));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["status"], "FairUnproven");
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_oscilab"));
    c.env_remove("OSCILAB_THREADS");
    c
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg("run")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .args(["--threads", "1"])
        .args(extra)
        .output()
        .unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(p).unwrap()).unwrap()
}

#[test]
fn verify_wvn_writes_residual_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&config("verify-wvn.json"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let res = read_json(&dir.path().join("residual.json"));
    assert!(res["residual"].as_f64().unwrap() < 1e-9);
    let m = read_json(&dir.path().join("manifest.json"));
    let outputs = m["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 1);
    let bytes = std::fs::read(dir.path().join("residual.json")).unwrap();
    assert_eq!(outputs[0]["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
    assert_eq!(m["config"]["command"], "verify-wvn");
}

#[test]
fn zero_beta_is_rejected_before_compute() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = run(&config("phase-diagram.json"), &out, &["--set", "params.betas=[0.0]"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stdout_json(&o);
    assert_eq!(err["status"], "validation_error");
    assert_eq!(err["invariant"], "beta > 0");
    assert!(!out.exists());
}

#[test]
fn unknown_command_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&config("verify-wvn.json"), dir.path(), &["--set", "command=levitate"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stdout_json(&o)["name"], "command");
}

#[test]
fn missing_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&dir.path().join("nope.json"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn singular_construction_exits_1_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("kg");
    let o = run(&config("construct-kg.json"), &out, &["--set", "params.m=1"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout_json(&o)["status"], "compute_error");
    assert!(!out.exists());
}

#[test]
fn override_reaches_params() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&config("verify-wvn.json"), dir.path(), &["--set", "params.dim=3", "--set", "params.x_max=20"]);
    assert_eq!(o.status.code(), Some(0));
    let res = read_json(&dir.path().join("residual.json"));
    assert_eq!(res["dim"], 3);
    assert_eq!(res["x_max"], 20.0);
}

#[test]
fn bad_thread_env_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .arg("run")
        .arg(config("verify-wvn.json"))
        .arg("--out")
        .arg(dir.path())
        .env("OSCILAB_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stdout_json(&o)["name"], "OSCILAB_THREADS");
}

#[test]
fn phase_diagram_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = run(&config("phase-diagram.json"), d.path(), &[]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["phase.csv", "phase.svg", "phase.json"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
    let csv = std::fs::read_to_string(a.path().join("phase.csv")).unwrap();
    assert!(csv.starts_with("alpha,beta,window,verdict\n"));
    let m = read_json(&a.path().join("manifest.json"));
    assert_eq!(m["outputs"].as_array().unwrap().len(), 3);
    assert!(!m["lap_disclosures"].as_array().unwrap().is_empty());
}

#[test]
fn lap_scan_discloses_floor() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&config("lap-scan.json"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("lap.csv")).unwrap();
    assert!(csv.starts_with("re_z,im_z,box_L,norm\n"));
    let s = read_json(&dir.path().join("lap_summary.json"));
    for k in ["sup_norm", "p", "verdict", "im_floor", "level_spacing"] {
        assert!(s.get(k).is_some(), "{k}");
    }
    let m = read_json(&dir.path().join("manifest.json"));
    assert_eq!(m["lap_disclosures"][0]["im_floor"], s["im_floor"]);
}

#[test]
fn list_has_eight_commands_and_is_stable() {
    let a = bin().arg("list").output().unwrap();
    let b = bin().arg("list").output().unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.split_whitespace().count() >= 2));
}

#[test]
fn every_sample_config_runs() {
    for name in ["construct-dirac.json", "construct-kg.json", "compactness-probe.json", "find-embedded.json"] {
        let dir = tempfile::tempdir().unwrap();
        let o = run(&config(name), dir.path(), &[]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&o.stdout));
        assert!(dir.path().join("manifest.json").exists());
    }
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_splinelab"));
    cmd.args(args).env_remove("SPLINELAB_OUT");
    if let Some(dir) = env_out {
        cmd.env("SPLINELAB_OUT", dir);
    }
    cmd.output().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(run(&["project", "--k", "0", "--out", out], None).status.code(), Some(2));
    assert_eq!(run(&["decay", "--mesh", "hexagonal", "--out", out], None).status.code(), Some(2));
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"no_such_field": 3}"#).unwrap();
    assert_eq!(run(&["project", "--config", cfg.to_str().unwrap(), "--out", out], None).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"], None).status.code(), Some(2));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"f": "x", "k": [2], "n": [6, 6]}"#).unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["project", "--config", cfg.to_str().unwrap(), "--f", "runge", "--out", out], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&dir.path().join("project.json"));
    assert_eq!(v["f"], "runge");
    // n comes from the file untouched
    assert_eq!(v["shape"], serde_json::json!([6, 6]));
}

#[test]
fn output_directory_defaults_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["project", "--f", "xy", "--k", "2", "--n", "4,4"], Some(dir.path()));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("project.json")).unwrap();
    assert!(!text.contains('\r') && text.ends_with('\n'));
    // keys come out sorted
    let keys = ["\"coeffs\"", "\"f\"", "\"shape\"", "\"sup_error\""];
    let pos: Vec<usize> = keys.iter().map(|k| text.find(k).unwrap()).collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]), "{text}");
    let stdout: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(stdout["pass"], true);
    assert_eq!(stdout["seed"], 20240521);
}

#[test]
fn failed_checks_exit_with_one_and_leave_a_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["converge", "--n", "10,10", "--out", out], None);
    assert_eq!(o.status.code(), Some(1));
    let v = read_json(&dir.path().join("failure.json"));
    assert_eq!(v["pass"], false);
    assert!(!v["failures"].as_array().unwrap().is_empty());
}

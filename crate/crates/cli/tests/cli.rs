use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use nlstrain_cli::{config_hash, Command as Cmd, Failure, RunConfig, EXIT_ACCEPTANCE};
use serde_json::Value;

fn nlstrain(cmd: &str, config: &str, out: &Path) -> i32 {
    let cfg = out.join(format!("{cmd}.config.json"));
    fs::create_dir_all(out).unwrap();
    fs::write(&cfg, config).unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_nlstrain"))
        .args([cmd, "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap();
    status.status.code().unwrap()
}

fn artifact(dir: &Path, cmd: &str, ext: &str) -> PathBuf {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| {
            let name = p.file_name().unwrap().to_str().unwrap();
            name.starts_with(&format!("{cmd}-")) && name.ends_with(&format!(".{ext}")) && !name.contains("config")
        })
        .unwrap_or_else(|| panic!("no {cmd} .{ext} artifact in {}", dir.display()))
}

fn error_json(dir: &Path) -> Value {
    serde_json::from_slice(&fs::read(dir.join("error.json")).unwrap()).unwrap()
}

const PURE_CUBIC: &str = r#"{"kind": "pure_power", "alpha": 2.0}"#;
const DOUBLE: &str = r#"{"kind": "double_power", "alpha": 1.0, "beta": 2.0}"#;

#[test]
fn bound_state_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let code = nlstrain("bound-state", &format!(r#"{{"nl": {PURE_CUBIC}, "omega": 1.0}}"#), dir.path());
    assert_eq!(code, 0);
    let js: Value = serde_json::from_slice(&fs::read(artifact(dir.path(), "bound-state", "json")).unwrap()).unwrap();
    let phi0 = js["result"]["phi0"].as_f64().unwrap();
    assert!((phi0 - 2f64.sqrt()).abs() < 1e-6, "phi0 {phi0}");
    let csv = fs::read_to_string(artifact(dir.path(), "bound-state", "csv")).unwrap();
    assert!(csv.starts_with("r,phi,dphi,d2phi\n"));
}

#[test]
fn pure_power_has_no_kink() {
    let dir = tempfile::tempdir().unwrap();
    let code = nlstrain("kink", &format!(r#"{{"nl": {PURE_CUBIC}}}"#), dir.path());
    assert_eq!(code, 3);
    assert_eq!(error_json(dir.path())["kind"], "NoKink");
}

#[test]
fn double_power_kink_runs() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(nlstrain("kink", &format!(r#"{{"nl": {DOUBLE}}}"#), dir.path()), 0);
    let js: Value = serde_json::from_slice(&fs::read(artifact(dir.path(), "kink", "json")).unwrap()).unwrap();
    let b = js["result"]["params"]["b"].as_f64().unwrap();
    assert!((b - 2.0 / 3.0).abs() < 1e-10);
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let code = nlstrain("bound-state", &format!(r#"{{"nl": {PURE_CUBIC}, "omgea": 1.0}}"#), dir.path());
    assert_eq!(code, 2);
    let err = error_json(dir.path());
    assert_eq!(err["kind"], "InvalidInput");
    assert!(err["message"].as_str().unwrap().contains("omgea"));
}

#[test]
fn command_must_match_config() {
    let dir = tempfile::tempdir().unwrap();
    let code = nlstrain("kink", &format!(r#"{{"command": "bound-state", "nl": {PURE_CUBIC}}}"#), dir.path());
    assert_eq!(code, 2);
}

#[test]
fn missing_config_file_writes_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_nlstrain"))
        .args(["kink", "--config"])
        .arg(dir.path().join("absent.json"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(dir.path())["kind"], "Io");
}

const SOURCE_DECAY: &str = r#"{
    "nl": {"kind": "pure_power", "alpha": 2.0},
    "preset": {"kind": "A", "j_max": 3, "v_bar": 20.0},
    "grid": {"L": 1280.0, "N": 16384},
    "T": 2.0,
    "sample_times": [0.5, 1.0, 1.5, 2.0]
}"#;

#[test]
fn identical_configs_give_identical_csv() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(nlstrain("source-decay", SOURCE_DECAY, a.path()), 0);
    assert_eq!(nlstrain("source-decay", SOURCE_DECAY, b.path()), 0);
    let pa = artifact(a.path(), "source-decay", "csv");
    let pb = artifact(b.path(), "source-decay", "csv");
    assert_eq!(pa.file_name(), pb.file_name());
    assert_eq!(fs::read(pa).unwrap(), fs::read(pb).unwrap());
}

#[test]
fn resolved_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(nlstrain("source-decay", SOURCE_DECAY, dir.path()), 0);
    let path = artifact(dir.path(), "source-decay", "json");
    let js: Value = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
    let back: RunConfig = serde_json::from_value(js["config"].clone()).unwrap();
    let direct = RunConfig::parse(SOURCE_DECAY).unwrap().resolve(Cmd::SourceDecay).unwrap();
    assert_eq!(back, direct);
    assert_eq!(back.resolve(Cmd::SourceDecay).unwrap(), back);
    let name = path.file_name().unwrap().to_str().unwrap();
    assert_eq!(name, format!("source-decay-{}.json", config_hash(&back)));
}

#[test]
fn train_diagnostics_of_a_preset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"nl": {"kind": "pure_power", "alpha": 2.0}, "preset": {"kind": "A", "j_max": 6, "v_bar": -10.0}}"#;
    assert_eq!(nlstrain("train-diagnostics", cfg, dir.path()), 0);
    let js: Value = serde_json::from_slice(&fs::read(artifact(dir.path(), "train-diagnostics", "json")).unwrap()).unwrap();
    assert_eq!(js["result"]["diagnostics"]["v_star"].as_f64(), Some(10.0));
    let csv = fs::read_to_string(artifact(dir.path(), "train-diagnostics", "csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn evolve_train_reports_decay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
        "nl": {"kind": "pure_power", "alpha": 2.0},
        "preset": {"kind": "A", "j_max": 2, "v_bar": 20.0},
        "grid": {"L": 512.0, "N": 8192},
        "T": 1.0,
        "dt": 0.005
    }"#;
    assert_eq!(nlstrain("evolve-train", cfg, dir.path()), 0);
    let js: Value = serde_json::from_slice(&fs::read(artifact(dir.path(), "evolve-train", "json")).unwrap()).unwrap();
    assert!(js["result"]["conservation"]["mass_drift"].as_f64().unwrap() < 1e-12);
    let csv = fs::read_to_string(artifact(dir.path(), "evolve-train", "csv")).unwrap();
    assert_eq!(csv.lines().count(), 162);
}

#[test]
fn duhamel_iterates_contract() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
        "nl": {"kind": "pure_power", "alpha": 2.0},
        "preset": {"kind": "A", "j_max": 2, "v_bar": 20.0},
        "grid": {"L": 512.0, "N": 8192},
        "T": 1.0,
        "dt_q": 0.02,
        "iterations": 3
    }"#;
    assert_eq!(nlstrain("duhamel", cfg, dir.path()), 0);
    let js: Value = serde_json::from_slice(&fs::read(artifact(dir.path(), "duhamel", "json")).unwrap()).unwrap();
    let ratios = js["result"]["contraction"]["ratios"].as_array().unwrap();
    assert!(!ratios.is_empty());
    assert!(ratios.iter().all(|r| r.as_f64().unwrap() < 0.5));
    let csv = fs::read_to_string(artifact(dir.path(), "duhamel", "csv")).unwrap();
    assert!(csv.starts_with("t,eta0_l2,eta1_l2,eta2_l2,eta3_l2\n"));
}

#[test]
fn verify_all_runs_selected_criteria() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(nlstrain("verify-all", r#"{"criteria": [2, 6, 11, 12]}"#, dir.path()), 0);
    let csv = fs::read_to_string(artifact(dir.path(), "verify-all", "csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert_eq!(nlstrain("verify-all", r#"{"criteria": [13]}"#, dir.path()), 2);
}

#[test]
fn acceptance_failures_exit_with_four() {
    assert_eq!(Failure::Acceptance(vec![1]).exit_code(), EXIT_ACCEPTANCE);
    assert_eq!(Failure::Acceptance(vec![1]).to_json()["kind"], "AcceptanceFailed");
}

//! Exit codes, artifacts and structured errors of the subcommands.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn reeblab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reeblab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("REEBLAB_THREADS")
        .output()
        .expect("spawn reeblab")
}

fn canonical(out: &Path) -> Value {
    serde_json::from_slice(&fs::read(out.join("canonical.json")).unwrap()).unwrap()
}

fn profile(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../profiles").join(name)
}

#[test]
fn qcmap_near_one_reports_non_contraction() {
    let dir = tempfile::tempdir().unwrap();
    let out = reeblab(&["qcmap", "--mu-sup", "0.99", "--p", "6", "--n", "64"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let c = canonical(dir.path());
    assert_eq!(c["status"], "error");
    assert_eq!(c["error"]["kind"], "non_contraction");
    assert!(!c["error"]["rates"].as_array().unwrap().is_empty());
}

#[test]
fn leaf_on_example2_emits_profile_and_rate() {
    let dir = tempfile::tempdir().unwrap();
    let p = profile("example2.json");
    let out = reeblab(&["leaf", "--profile", p.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("leaf.csv")).unwrap();
    assert!(csv.starts_with("s,r,a\n"));
    let meta: Value = serde_json::from_slice(&fs::read(dir.path().join("leaf_meta.json")).unwrap()).unwrap();
    let (kappa, hat) = (meta["kappa"].as_f64().unwrap(), meta["kappa_hat"].as_f64().unwrap());
    assert!((kappa - hat).abs() < 1e-3);
    assert_eq!(meta["seed"], 0);
    assert!(canonical(dir.path())["files"].as_array().unwrap().contains(&"leaf.csv".into()));
}

#[test]
fn bad_configuration_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = reeblab(&["qcmap", "--n", "12"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(canonical(dir.path())["error"]["kind"], "precondition");

    let out = reeblab(&["leaf", "--tol", "-1"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let out = reeblab(&["no-such-command"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_profile_kind_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"T":1,"k":0.7,"kind":"example3","r_max":0.9}"#).unwrap();
    let out = reeblab(&["validate", "--profile", bad.to_str().unwrap()], &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(canonical(&dir.path().join("o"))["error"]["kind"], "schema");
}

#[test]
fn every_report_echoes_config_and_tolerances() {
    let dir = tempfile::tempdir().unwrap();
    let out = reeblab(&["flow", "--seed", "7"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let c = canonical(dir.path());
    assert_eq!(c["seed"], 7);
    assert_eq!(c["config"]["command"]["name"], "flow");
    assert_eq!(c["config"]["N"], 16);
    for claim in c["paper_identities"].as_array().unwrap().iter().chain(c["numerical_diagnostics"].as_array().unwrap())
    {
        assert!(claim["tolerance"].is_number(), "{claim}");
    }
}

#[test]
fn thread_flag_overrides_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_reeblab"))
        .args(["validate", "--threads", "2", "--out"])
        .arg(dir.path())
        .env("REEBLAB_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(r["provenance"]["threads"], 2);
    assert_eq!(r["canonical"]["config"]["threads"], 2);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in [["dbar", "--N", "8"].as_slice(), &["spectrum", "--N", "32"], &["design-curve"], &["leaf"]] {
        let snapshot = || {
            assert_eq!(reeblab(cmd, dir.path()).status.code(), Some(0), "{cmd:?}");
            let files: Vec<String> = serde_json::from_value(canonical(dir.path())["files"].clone()).unwrap();
            files
                .iter()
                .map(String::as_str)
                .chain(["canonical.json"])
                .map(|f| (f.to_string(), fs::read(dir.path().join(f)).unwrap()))
                .collect::<Vec<_>>()
        };
        let first = snapshot();
        for ((name, a), (_, b)) in first.iter().zip(&snapshot()) {
            assert!(a == b, "{cmd:?}: {name} differs between runs");
        }
    }
}

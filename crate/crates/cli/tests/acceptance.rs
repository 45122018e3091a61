//! The twelve acceptance criteria, run through the `reeblab suite` binary.
//! Prints one PASS/FAIL line per criterion, bypassing output capture.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use serde_json::Value;

fn run_suite(out: &Path) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_reeblab"))
        .args(["suite", "--out"])
        .arg(out)
        .env_remove("REEBLAB_THREADS")
        .stdout(Stdio::null())
        .status()
        .expect("spawn reeblab")
        .code()
        .expect("exit code")
}

/// Every file under `dir` except `report.json`, which holds timings.
fn payload(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().unwrap() != "report.json" {
                let bytes = fs::read(&path).unwrap();
                files.push((path.strip_prefix(dir).unwrap().to_path_buf(), bytes));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn acceptance_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let code = run_suite(dir.path());
    let first = payload(dir.path());
    let report: Value = serde_json::from_slice(&fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(run_suite(dir.path()), code);
    let second = payload(dir.path());

    let canonical = &report["canonical"];
    let timings = &report["provenance"]["timings"];
    let mut failed = Vec::new();
    for c in canonical["results"]["criteria"].as_array().unwrap() {
        let id = c["id"].as_u64().unwrap();
        let key = format!("c{id:02}");
        let elapsed = timings[&key].as_f64().unwrap();
        let budget = c["budget_s"].as_f64();
        let mut ok = c["passed"].as_bool().unwrap() && budget.is_none_or(|b| elapsed < b);
        let mut note = String::new();
        if id == 12 {
            let same = first == second;
            ok &= same;
            note = format!(", two-process payloads identical: {same} ({} files)", first.len());
        }
        let claims = canonical["paper_identities"]
            .as_array()
            .unwrap()
            .iter()
            .chain(canonical["numerical_diagnostics"].as_array().unwrap())
            .filter(|cl| cl["name"].as_str().unwrap().starts_with(&format!("{key}.")))
            .count();
        let budget_text = budget.map_or("none".to_string(), |b| format!("{b} s"));
        // Written to the raw handle so the lines survive output capture.
        writeln!(
            std::io::stderr(),
            "{} criterion {id:>2} {}: {claims} claims, {elapsed:.3} s (budget {budget_text}){note}",
            if ok { "PASS" } else { "FAIL" },
            c["title"].as_str().unwrap(),
        )
        .unwrap();
        if !ok {
            failed.push(id);
        }
    }
    assert_eq!(canonical["results"]["criteria"].as_array().unwrap().len(), 12);
    assert_eq!(code, 0, "suite exit status");
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

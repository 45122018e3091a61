//! Claims, report bundles and canonical JSON.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use super::config::RunConfig;
use crate::error::{Error, Result};

/// How a measured value is compared against its tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|measured − target| ≤ tolerance`.
    AbsWithin,
    /// `|measured − target| ≤ tolerance · |target|`.
    RelWithin,
    /// `measured < tolerance`.
    Below,
    /// `measured ≤ tolerance`.
    AtMost,
    /// `measured ≥ tolerance`.
    AtLeast,
    /// `measured = target` exactly; tolerance 0.
    Equals,
}

/// One numeric claim with the tolerance it was tested against.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Claim {
    pub name: String,
    pub measured: f64,
    pub relation: Relation,
    pub target: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
}

impl Claim {
    fn new(name: impl Into<String>, measured: f64, relation: Relation, target: Option<f64>, tolerance: f64) -> Self {
        let t = target.unwrap_or(0.0);
        let passed = match relation {
            Relation::AbsWithin => (measured - t).abs() <= tolerance,
            Relation::RelWithin => (measured - t).abs() <= tolerance * t.abs(),
            Relation::Below => measured < tolerance,
            Relation::AtMost => measured <= tolerance,
            Relation::AtLeast => measured >= tolerance,
            Relation::Equals => measured == t,
        };
        Self { name: name.into(), measured, relation, target, tolerance, passed }
    }

    pub fn abs_within(name: impl Into<String>, measured: f64, target: f64, tol: f64) -> Self {
        Self::new(name, measured, Relation::AbsWithin, Some(target), tol)
    }

    pub fn rel_within(name: impl Into<String>, measured: f64, target: f64, tol: f64) -> Self {
        Self::new(name, measured, Relation::RelWithin, Some(target), tol)
    }

    pub fn below(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self::new(name, measured, Relation::Below, None, bound)
    }

    pub fn at_most(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self::new(name, measured, Relation::AtMost, None, bound)
    }

    pub fn at_least(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self::new(name, measured, Relation::AtLeast, None, bound)
    }

    pub fn equals(name: impl Into<String>, measured: f64, target: f64) -> Self {
        Self::new(name, measured, Relation::Equals, Some(target), 0.0)
    }

    /// Boolean fact encoded as `1 = 1`.
    pub fn holds(name: impl Into<String>, fact: bool) -> Self {
        Self::equals(name, if fact { 1.0 } else { 0.0 }, 1.0)
    }

    /// Claim whose verdict comes from the checked routine itself.
    pub fn with_verdict(mut self, passed: bool) -> Self {
        self.passed = passed;
        self
    }
}

/// Structured failure carried by a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub kind: &'static str,
    pub message: String,
    /// Increment ratios of a non-contracting iteration.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rates: Option<Vec<f64>>,
    pub exit_code: i32,
}

impl From<&Error> for ErrorReport {
    fn from(e: &Error) -> Self {
        let kind = match e {
            Error::ConstraintViolation { .. } => "constraint_violation",
            Error::OutOfRange { .. } => "out_of_range",
            Error::Precondition(_) => "precondition",
            Error::NonContraction { .. } => "non_contraction",
            Error::Divergence(_) => "divergence",
            Error::RankDeficient(_) => "rank_deficient",
            Error::Numeric(_) => "numeric",
            Error::Schema(_) => "schema",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
        };
        let rates = match e {
            Error::NonContraction { rates, .. } => Some(rates.clone()),
            _ => None,
        };
        Self { kind, message: e.to_string(), rates, exit_code: exit_code_for(e) }
    }
}

/// Exit status for an error: 3 for numeric failures, 2 for everything else.
pub fn exit_code_for(e: &Error) -> i32 {
    if e.is_numeric() {
        3
    } else {
        2
    }
}

/// Output file carried by a bundle, relative to the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub path: String,
    pub bytes: Vec<u8>,
}

/// Non-canonical run metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub crate_name: &'static str,
    pub version: &'static str,
    pub threads: usize,
    pub started_unix_s: f64,
    pub wall_time_s: f64,
    /// Wall time of named subtasks in seconds.
    pub timings: BTreeMap<String, f64>,
}

/// Everything one run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub config: RunConfig,
    /// Closed-form comparisons.
    pub identities: Vec<Claim>,
    /// Measured rates, constants and solver health.
    pub diagnostics: Vec<Claim>,
    /// Command-specific payload.
    pub results: Value,
    pub error: Option<ErrorReport>,
    /// Extra failures that do not abort the run, e.g. a suite criterion.
    pub failures: Vec<ErrorReport>,
    pub artifacts: Vec<Artifact>,
    pub provenance: Provenance,
}

impl ReportBundle {
    /// 0 if every claim holds, 1 on a failed claim, 2 or 3 on an error.
    pub fn exit_code(&self) -> i32 {
        if let Some(e) = &self.error {
            return e.exit_code;
        }
        if self.failures.iter().any(|f| f.exit_code == 3) {
            return 3;
        }
        let failed = !self.failures.is_empty() || self.identities.iter().chain(&self.diagnostics).any(|c| !c.passed);
        i32::from(failed)
    }

    /// The deterministic part of the report.
    pub fn canonical(&self) -> Value {
        let code = self.exit_code();
        let status = match code {
            0 => "pass",
            1 => "fail",
            _ => "error",
        };
        let mut files: Vec<&str> = self.artifacts.iter().map(|a| a.path.as_str()).collect();
        files.sort_unstable();
        json!({
            "command": self.config.command.name(),
            "config": self.config,
            "seed": self.config.seed,
            "status": status,
            "exit_code": code,
            "paper_identities": self.identities,
            "numerical_diagnostics": self.diagnostics,
            "results": self.results,
            "error": self.error,
            "failures": self.failures,
            "files": files,
        })
    }

    /// Write `canonical.json`, `report.json` (canonical plus provenance) and
    /// every artifact under `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let canonical = self.canonical();
        fs::write(dir.join("canonical.json"), canonical_json(&canonical)?)?;
        let full = json!({ "canonical": canonical, "provenance": self.provenance });
        fs::write(dir.join("report.json"), canonical_json(&full)?)?;
        for a in &self.artifacts {
            let path = dir.join(&a.path);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, &a.bytes)?;
        }
        Ok(())
    }
}

/// RFC 8785 text of any serializable value: sorted keys, shortest
/// round-trip numbers, no insignificant whitespace. Non-finite floats
/// become `null`.
pub fn canonical_json<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let v = serde_json::to_value(value)?;
    let mut out = serde_jcs::to_vec(&v).map_err(|e| Error::Format(format!("canonical JSON: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

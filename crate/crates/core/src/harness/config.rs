//! Run configuration and its validation.

use std::path::PathBuf;

use serde::Serialize;

use crate::error::{Error, Result};

/// Source of the Beltrami coefficient for `qcmap`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MuSource {
    /// `μ = ((K−1)/(K+1)) z/z̄` on the unit disk with `‖μ‖∞ = sup`.
    RadialStretch { sup: f64 },
    /// A QCG1 grid file.
    File(PathBuf),
}

/// Subcommand and its own parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    /// Check the local-model conditions of a profile.
    Validate { samples: usize },
    /// Binding orbit, Floquet data, return times and the contact condition.
    Flow { radii: usize },
    /// Integrate a Giroux leaf and fit its decay.
    Leaf { r0: f64, s_span: f64, step: f64 },
    /// Spectrum of the asymptotic operator, optionally fitting a field file.
    Spectrum { field: Option<PathBuf> },
    /// Normalized quasiconformal map.
    Qcmap { mu: MuSource, p: f64, extent: f64 },
    /// Torus `∂̄`, Hodge, Fredholm and a manufactured Newton solve.
    Dbar,
    /// Build and validate the interpolation-curve profile.
    DesignCurve { delta: f64, eps0: f64, gamma1_at_0: f64, kappa: f64 },
    /// The full acceptance run.
    Suite,
}

impl Command {
    /// Subcommand name as typed on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Flow { .. } => "flow",
            Command::Leaf { .. } => "leaf",
            Command::Spectrum { .. } => "spectrum",
            Command::Qcmap { .. } => "qcmap",
            Command::Dbar => "dbar",
            Command::DesignCurve { .. } => "design-curve",
            Command::Suite => "suite",
        }
    }

    /// Default mode count: loop samples for `spectrum`, torus modes otherwise.
    pub fn default_modes(&self) -> usize {
        match self {
            Command::Spectrum { .. } => 64,
            _ => 16,
        }
    }
}

/// Default Beltrami grid size.
pub const DEFAULT_GRID: usize = 512;
/// Default solver tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Everything a run depends on; echoed verbatim into every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    /// Profile JSON; the example-1 profile `T = 1`, `k = 0.7` when absent.
    pub profile: Option<PathBuf>,
    pub out: PathBuf,
    /// Beltrami grid size.
    pub n: usize,
    /// Torus truncation or loop sample count.
    #[serde(rename = "N")]
    pub n_modes: usize,
    pub tol: f64,
    pub seed: u64,
    /// Worker threads; the ambient pool when absent.
    pub threads: Option<usize>,
}

impl RunConfig {
    /// Defaults for `command` writing into `out`.
    pub fn new(command: Command, out: impl Into<PathBuf>) -> Self {
        let n_modes = command.default_modes();
        Self {
            command,
            profile: None,
            out: out.into(),
            n: DEFAULT_GRID,
            n_modes,
            tol: DEFAULT_TOL,
            seed: 0,
            threads: None,
        }
    }

    /// Check the invariants: positive tolerances, `n` a power of two and
    /// sane subcommand parameters.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Precondition(m));
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad(format!("--tol = {} must be positive", self.tol));
        }
        if self.n < 8 || !self.n.is_power_of_two() {
            return bad(format!("--n = {} must be a power of two >= 8", self.n));
        }
        if self.n_modes == 0 {
            return bad("--N must be positive".into());
        }
        if self.threads == Some(0) {
            return bad("--threads must be positive".into());
        }
        if self.out.as_os_str().is_empty() {
            return bad("--out must name a directory".into());
        }
        match &self.command {
            Command::Validate { samples } if *samples < 16 => bad(format!("--samples = {samples} < 16")),
            Command::Flow { radii } if *radii == 0 => bad("--radii must be positive".into()),
            Command::Leaf { r0, s_span, step } if !(*r0 > 0.0 && *s_span > 0.0 && *step > 0.0) => {
                bad(format!("leaf needs positive r0, s-span and step, got {r0}, {s_span}, {step}"))
            }
            Command::Qcmap { mu, p, extent } => {
                if !(*p > 2.0 && p.is_finite()) {
                    return bad(format!("--p = {p} must exceed 2"));
                }
                if !(*extent >= 2.0 && extent.is_finite()) {
                    return bad(format!("--extent = {extent} must be at least 2"));
                }
                match mu {
                    MuSource::RadialStretch { sup } if !(*sup >= 0.0 && *sup < 1.0) => {
                        bad(format!("--mu-sup = {sup} must lie in [0, 1)"))
                    }
                    _ => Ok(()),
                }
            }
            Command::DesignCurve { delta, eps0, gamma1_at_0, kappa } => {
                if [*delta, *eps0, *gamma1_at_0, *kappa].iter().any(|v| !v.is_finite()) {
                    return bad("design-curve parameters must be finite".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariants() {
        let ok = RunConfig::new(Command::Suite, "out");
        assert!(ok.validate().is_ok());
        assert!(RunConfig { n: 96, ..ok.clone() }.validate().is_err());
        assert!(RunConfig { tol: 0.0, ..ok.clone() }.validate().is_err());
        assert!(RunConfig { tol: f64::NAN, ..ok.clone() }.validate().is_err());
        assert!(RunConfig { threads: Some(0), ..ok.clone() }.validate().is_err());
        let q = RunConfig::new(Command::Qcmap { mu: MuSource::RadialStretch { sup: 1.0 }, p: 4.0, extent: 4.0 }, "o");
        assert!(q.validate().is_err());
    }

    #[test]
    fn config_echo_names_fields() {
        let v = serde_json::to_value(RunConfig::new(Command::Dbar, "o")).unwrap();
        assert_eq!(v["command"]["name"], "dbar");
        assert_eq!(v["N"], 16);
        assert_eq!(v["seed"], 0);
    }
}

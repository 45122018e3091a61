//! Command runner behind the `reeblab` binary: configuration, the
//! subcommands, the acceptance suite and report writing.

pub mod commands;
pub mod config;
pub mod io;
pub mod report;
pub mod suite;

use std::time::{Instant, SystemTime, UNIX_EPOCH};

pub use commands::Outcome;
pub use config::{Command, MuSource, RunConfig, DEFAULT_GRID, DEFAULT_TOL};
pub use io::{grid_io, parse_profile_file, profile_canonical_json, read_half_cylinder, write_half_cylinder, GridIo};
pub use report::{canonical_json, exit_code_for, Artifact, Claim, ErrorReport, Provenance, Relation, ReportBundle};
pub use suite::{Criterion, CRITERIA};

use crate::error::{Error, Result};

fn execute(config: &RunConfig) -> Result<Outcome> {
    config.validate()?;
    match config.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?
            .install(|| commands::dispatch(config)),
        None => commands::dispatch(config),
    }
}

/// Run `config` and collect its report. Errors land in the bundle rather
/// than being returned.
pub fn run(config: &RunConfig) -> ReportBundle {
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let clock = Instant::now();
    let (outcome, error) = match execute(config) {
        Ok(o) => (o, None),
        Err(e) => (Outcome::default(), Some(ErrorReport::from(&e))),
    };
    ReportBundle {
        config: config.clone(),
        identities: outcome.identities,
        diagnostics: outcome.diagnostics,
        results: outcome.results,
        error,
        failures: outcome.failures,
        artifacts: outcome.artifacts,
        provenance: Provenance {
            crate_name: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            threads: config.threads.unwrap_or_else(rayon::current_num_threads),
            started_unix_s: started,
            wall_time_s: clock.elapsed().as_secs_f64(),
            timings: outcome.timings,
        },
    }
}

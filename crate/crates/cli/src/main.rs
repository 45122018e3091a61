//! `reeblab`: batch runs of the numerical laboratory. Every subcommand
//! writes `canonical.json`, `report.json` and its tables into `--out`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use reeblab::harness::{run, Command, MuSource, RunConfig, DEFAULT_GRID, DEFAULT_TOL};

#[derive(Debug, Parser)]
#[command(name = "reeblab", version, about = "Numerical laboratory for local contact models")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Args)]
struct Global {
    /// Profile JSON file; example 1 with T = 1, k = 0.7 when omitted.
    #[arg(long, global = true)]
    profile: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "reeblab-out")]
    out: PathBuf,
    /// Beltrami grid size (power of two).
    #[arg(long = "n", global = true, default_value_t = DEFAULT_GRID)]
    n: usize,
    /// Torus truncation, or loop samples for `spectrum`.
    #[arg(long = "N", global = true)]
    n_modes: Option<usize>,
    /// Solver tolerance.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Seed for every random choice in the run.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads.
    #[arg(long, global = true, env = "REEBLAB_THREADS")]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Check the local-model conditions of the profile.
    Validate {
        /// Radii sampled per condition.
        #[arg(long, default_value_t = 256)]
        samples: usize,
    },
    /// Binding orbit, Floquet data, return times and the contact condition.
    Flow {
        /// Radii in the return-time table.
        #[arg(long, default_value_t = 8)]
        radii: usize,
    },
    /// Integrate a Giroux leaf and fit its decay rate.
    Leaf {
        /// Starting radius at s = 0.
        #[arg(long, default_value_t = 0.1)]
        r0: f64,
        /// Length of the s-interval.
        #[arg(long, default_value_t = 20.0)]
        s_span: f64,
        /// RK4 step in s.
        #[arg(long, default_value_t = 0.01)]
        step: f64,
    },
    /// Spectrum of the asymptotic operator.
    Spectrum {
        /// HCF1 field to fit against the spectrum.
        #[arg(long)]
        field: Option<PathBuf>,
    },
    /// Normalized quasiconformal map of a Beltrami coefficient.
    Qcmap {
        /// Sup norm of the radial-stretch coefficient.
        #[arg(long, default_value_t = 1.0 / 3.0, conflicts_with = "mu_file")]
        mu_sup: f64,
        /// QCG1 coefficient file.
        #[arg(long)]
        mu_file: Option<PathBuf>,
        /// Integrability exponent, p > 2.
        #[arg(long, default_value_t = 4.0)]
        p: f64,
        /// Half side of the grid square.
        #[arg(long, default_value_t = 4.0)]
        extent: f64,
    },
    /// Torus dbar, Hodge and Fredholm data plus a manufactured Newton solve.
    Dbar,
    /// Build and validate the interpolation-curve profile.
    DesignCurve {
        /// Slope of the flat tail gamma_1 = -delta r.
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        /// Width of the flat tail.
        #[arg(long, default_value_t = 0.1)]
        eps0: f64,
        /// Value of gamma_1 on the binding.
        #[arg(long, default_value_t = 1.0)]
        gamma1_at_0: f64,
        /// Target kappa of the binding orbit.
        #[arg(long, default_value_t = -0.7, allow_hyphen_values = true)]
        kappa: f64,
    },
    /// The full acceptance run.
    Suite,
}

impl Cmd {
    fn into_command(self) -> Command {
        match self {
            Cmd::Validate { samples } => Command::Validate { samples },
            Cmd::Flow { radii } => Command::Flow { radii },
            Cmd::Leaf { r0, s_span, step } => Command::Leaf { r0, s_span, step },
            Cmd::Spectrum { field } => Command::Spectrum { field },
            Cmd::Qcmap { mu_sup, mu_file, p, extent } => {
                let mu = match mu_file {
                    Some(path) => MuSource::File(path),
                    None => MuSource::RadialStretch { sup: mu_sup },
                };
                Command::Qcmap { mu, p, extent }
            }
            Cmd::Dbar => Command::Dbar,
            Cmd::DesignCurve { delta, eps0, gamma1_at_0, kappa } => {
                Command::DesignCurve { delta, eps0, gamma1_at_0, kappa }
            }
            Cmd::Suite => Command::Suite,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let command = cli.command.into_command();
    let g = cli.global;
    let config = RunConfig {
        n_modes: g.n_modes.unwrap_or_else(|| command.default_modes()),
        command,
        profile: g.profile,
        out: g.out,
        n: g.n,
        tol: g.tol,
        seed: g.seed,
        threads: g.threads,
    };
    let bundle = run(&config);
    if let Err(e) = bundle.write(&config.out) {
        eprintln!("reeblab: cannot write report to {}: {e}", config.out.display());
        return ExitCode::from(2);
    }
    for c in bundle.identities.iter().chain(&bundle.diagnostics) {
        if !c.passed {
            eprintln!("FAIL {} measured {} ({:?} {})", c.name, c.measured, c.relation, c.tolerance);
        }
    }
    for f in bundle.error.iter().chain(&bundle.failures) {
        eprintln!("error [{}]: {}", f.kind, f.message);
    }
    let code = bundle.exit_code();
    println!(
        "{}: {} claims, exit {code}, report in {}",
        config.command.name(),
        bundle.identities.len() + bundle.diagnostics.len(),
        config.out.display()
    );
    ExitCode::from(code as u8)
}

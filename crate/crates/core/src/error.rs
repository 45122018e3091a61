//! Error type shared by every module.

use thiserror::Error;

/// Failures reported by the laboratory.
///
/// Each variant maps onto one harness exit class: precondition and schema
/// problems are usage errors, numeric variants are numeric failures.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A local-model condition (numbered 1 to 6) is violated by the inputs.
    #[error("local-model condition ({condition}) violated: {detail}")]
    ConstraintViolation { condition: u8, detail: String },

    /// An argument lies outside the admissible range.
    #[error("{what} = {value} is out of range {range}")]
    OutOfRange { what: &'static str, value: f64, range: String },

    /// A precondition on the inputs is not met.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// The fixed-point iteration does not contract.
    #[error("non-contraction: {detail}")]
    NonContraction { detail: String, rates: Vec<f64> },

    /// Newton or another iterative solve diverged or stalled.
    #[error("divergence: {0}")]
    Divergence(String),

    /// A linear system is more singular than expected.
    #[error("rank deficiency: {0}")]
    RankDeficient(String),

    /// A numerical method failed for a reason other than the above.
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// A file or document does not match its schema.
    #[error("schema error: {0}")]
    Schema(String),

    /// A binary payload is malformed.
    #[error("format error: {0}")]
    Format(String),

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of a numerical method rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonContraction { .. } | Error::Divergence(_) | Error::RankDeficient(_) | Error::Numeric(_)
        )
    }

    pub(crate) fn out_of_range(what: &'static str, value: f64, lo: f64, hi: f64) -> Self {
        Error::OutOfRange { what, value, range: format!("[{lo}, {hi}]") }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Schema(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Schema(e.to_string())
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

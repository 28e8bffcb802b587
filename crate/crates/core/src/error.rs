use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the domain of a function (e.g. `|r| > 1` for the
    /// logarithmic potential).
    #[error("domain error: {0}")]
    Domain(String),

    /// Evaluation at (or beyond) a singularity of the unregularized potential.
    #[error("singularity: {0}")]
    Singularity(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("operation not supported on this grid: {0}")]
    UnsupportedMode(String),

    /// A structural hypothesis on the model coefficients is violated.
    #[error("{hypothesis}: {message}")]
    Hypothesis {
        hypothesis: &'static str,
        message: String,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no coercivity threshold below r = {horizon}: {message}")]
    CoercivityFailure { horizon: f64, message: String },

    #[error("non-finite value after step {step}")]
    Divergence { step: usize },

    #[error("energy-law residual {residual:e} above trigger at step {step} after {halvings} halvings")]
    Stability {
        step: usize,
        halvings: usize,
        residual: f64,
    },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn hypothesis(hypothesis: &'static str, message: impl Into<String>) -> Self {
        Error::Hypothesis {
            hypothesis,
            message: message.into(),
        }
    }

    /// Process exit status for the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Divergence { .. } | Error::Stability { .. } | Error::Singularity(_) => 2,
            Error::Io(_) => 3,
            _ => 1,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("objective became non-finite after {sweeps} sweeps (check covariate scaling)")]
    NonFiniteObjective { sweeps: usize },

    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("gamma must be > 1, got {0}")]
    InvalidGamma(f64),

    #[error("scenario requires floor(4*sqrt(n) - 5) >= 9, got n = {0}")]
    InvalidSampleSize(usize),

    #[error("treatment arm {0} is empty")]
    DegenerateArm(u8),

    #[error("propensity score {value} at unit {index} gives a non-finite weight")]
    NonFiniteWeight { index: usize, value: f64 },

    #[error("no tuning candidate converged ({tried} tried)")]
    NoConvergedCandidate { tried: usize },

    #[error("{failed} of {total} replications failed (limit is 10%)")]
    TooManyFailures { failed: usize, total: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            got,
        })
    }
}

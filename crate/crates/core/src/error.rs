use std::path::PathBuf;

/// Errors produced by the solver library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// A documented precondition was violated by the caller.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Backtracking exhausted its trial budget; the search direction is not a
    /// descent direction.
    #[error("degenerate direction after {trials} backtracking trials (g'd = {slope:e})")]
    DegenerateDirection { trials: usize, slope: f64 },

    /// An internal invariant failed (e.g. the active-set loop overran its bound).
    #[error("internal assertion failed: {0}")]
    Internal(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    /// A benchmark run failed; identifies the run that did.
    #[error("{alg} (gamma = {gamma}, seed = {seed}): {source}")]
    Run {
        alg: String,
        gamma: f64,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

use std::path::PathBuf;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("degenerate instance: {0}")]
    Degenerate(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("system too large for {what}: n = {n}, limit = {limit}")]
    TooLarge { what: &'static str, n: usize, limit: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("observation window too short: need {needed} samples, have {available}")]
    WindowTooShort { needed: usize, available: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error(
        "eigensolver did not converge after {iterations} Krylov steps \
         (worst residual {residual:.3e}, tolerance {tolerance:.3e})"
    )]
    EigenNonConvergence {
        iterations: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    InputData,
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParameter(_) => ErrorClass::Usage,
            Error::Parse { .. }
            | Error::InvalidGraph(_)
            | Error::Degenerate(_)
            | Error::DimensionMismatch { .. }
            | Error::WindowTooShort { .. }
            | Error::EmptyInput(_)
            | Error::Io { .. }
            | Error::Csv { .. } => ErrorClass::InputData,
            Error::TooLarge { .. }
            | Error::EigenNonConvergence { .. }
            | Error::NoConvergence { .. } => ErrorClass::Numerical,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

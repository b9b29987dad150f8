use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the pipeline.
///
/// Variants fall into three families the CLI maps onto exit codes:
/// usage/configuration problems, bad data, and numerical non-convergence.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("instance graphs were built from different interaction networks")]
    NetworkMismatch,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("did not converge after {iterations} iterations: {detail}")]
    NonConvergence { iterations: usize, detail: String },

    #[error("nu search did not converge after {} iterations (variance {})", .0.iterations, .0.variance)]
    NuSearchStalled(Box<crate::nu_opt::NuSearchResult>),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("split {split}: {source}")]
    InSplit {
        split: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) => ErrorClass::Usage,
            Error::NonConvergence { .. } | Error::NuSearchStalled(_) | Error::Numerical(_) => ErrorClass::Numerical,
            Error::InSplit { source, .. } => source.class(),
            _ => ErrorClass::Data,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn in_split(self, split: usize) -> Self {
        Error::InSplit { split, source: Box::new(self) }
    }
}

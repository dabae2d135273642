use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {what} (expected {expected}, got {actual})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Each RIS dimension needs more than 4 elements (at least 3 information
    /// bits) for the block-diagonal encoder to reach minimum distance 3.
    #[error(
        "dimension-reduced code needs more than 4 elements per RIS dimension \
         (k1 = {k1}, k2 = {k2} information bits; each must be >= 3)"
    )]
    ReducedCodeInfeasible { k1: usize, k2: usize },

    #[error("code has k = {k} information bits; exhaustive search supports at most {max}")]
    CodeTooLarge { k: usize, max: usize },

    #[error("decode mode {mode} needs a dimension-split code")]
    MissingSplit { mode: &'static str },

    #[error("degenerate coverage mask: {0}")]
    DegenerateMask(&'static str),

    #[error("zero-norm channel cannot be normalized")]
    ZeroNormChannel,

    #[error("pseudoinverse failed: {0}")]
    Pseudoinverse(String),

    #[error("pilot budget {budget} is below the minimum of {min}")]
    BudgetTooSmall { budget: usize, min: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

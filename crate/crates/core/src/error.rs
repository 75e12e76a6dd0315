use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} = {value} is outside [{min}, {max}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("non-finite entry at index {0}")]
    NonFinite(usize),

    #[error("vector is not non-increasing and non-negative")]
    NotSortedNonNegative,

    #[error("dual norm ascent did not converge within {iterations} iterations (best {best})")]
    NonConvergence { iterations: usize, best: f64 },

    #[error("enumeration budget of {budget} nodes exceeded")]
    BudgetExceeded { budget: u64 },

    #[error("level index overflow for magnitude {0}")]
    LevelOverflow(f64),

    #[error("level table is degenerate: no level reaches norm 1 within dimension {0}")]
    DegenerateLevelTable(usize),

    #[error("point set is empty")]
    EmptyPointSet,

    #[error("ring tree depth cap {0} exceeded")]
    DepthCapExceeded(usize),

    #[error("rejection sampling gave up after {attempts} attempts: {reason}")]
    RejectionBudget { attempts: usize, reason: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

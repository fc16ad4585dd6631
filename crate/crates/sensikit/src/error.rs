//! Crate-wide error type.

use thiserror::Error;

/// Errors raised anywhere in the library or CLI.
#[derive(Debug, Error)]
#[non_exhaustive]
pub enum Error {
    #[error("invalid factor space: {0}")]
    InvalidFactorSpace(String),

    #[error("invalid group: {0}")]
    InvalidGroup(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// The sample cannot support the requested estimate (zero spread in the
    /// outputs, typically from a constant model or duplicated draws).
    #[error("degenerate sample for group {group}: {detail}")]
    DegenerateSample { group: String, detail: String },

    #[error("insufficient sample: n = {n}, need at least {needed}")]
    InsufficientSample { n: usize, needed: usize },

    #[error("singular parameter: {0}")]
    SingularParameter(String),

    #[error("model evaluation failed on matrix {matrix}, row {row}: {message}")]
    ModelEval {
        matrix: String,
        row: usize,
        message: String,
    },

    #[error("incompatible tables: {0}")]
    IncompatibleTables(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Numerical degeneracy, as opposed to a configuration or I/O problem.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::DegenerateSample { .. } | Error::InsufficientSample { .. }
        )
    }

    /// Process exit code contract: 0 success, 2 config error, 3 numerical
    /// degeneracy, 1 anything else (I/O, model failure).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DegenerateSample { .. } | Error::InsufficientSample { .. } => 3,
            Error::Io(_) | Error::Json(_) | Error::Csv(_) | Error::ModelEval { .. } => 1,
            _ => 2,
        }
    }
}

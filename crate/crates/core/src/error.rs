use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Smallest Gram eigenvalue fell below `1e-12 * largest`.
    #[error("singular Gram matrix (min eigenvalue {min_eigenvalue:e}, max eigenvalue {max_eigenvalue:e})")]
    SingularGram {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },

    #[error("subsample draw selected no rows")]
    EmptyDraw,

    /// All gradient norms are zero, so no sampling distribution can be formed.
    #[error("all gradient norms vanish; the pilot estimate already interpolates the data")]
    DegenerateGradients,

    #[error("row {row} has zero sampling probability but nonzero norm")]
    DivisionByZeroProb { row: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{failed} of {total} replications failed for {cell}")]
    ExcessiveFailures {
        cell: String,
        failed: usize,
        total: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures a replication may retry with a fresh seed.
    pub fn is_retryable(&self) -> bool {
        matches!(self, Error::SingularGram { .. } | Error::EmptyDraw)
    }
}

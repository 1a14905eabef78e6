use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not positive definite after jitter {jitter:e}")]
    NotPositiveDefinite { jitter: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("front contains dominated or duplicate points")]
    DominatedInput,

    #[error("multi-objective solver returned no points")]
    EmptySolverFront,

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

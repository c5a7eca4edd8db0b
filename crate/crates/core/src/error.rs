use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("at least one observation is required")]
    NoObservations,

    #[error("kernel matrix not positive definite (last jitter tried: {jitter:e})")]
    NotPositiveDefinite { jitter: f64 },

    #[error("hyperparameter fit failed: {0}")]
    FitFailed(String),

    #[error("hyperparameters not identifiable: {0}")]
    Identifiability(String),

    #[error("max-value sampling failed: {0}")]
    Sampling(String),

    #[error("objective returned non-finite value {value} at {x:?}")]
    NonFiniteObjective { x: Vec<f64>, value: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("benchmark error: {0}")]
    Benchmark(String),
}

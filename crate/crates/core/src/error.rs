use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("bond {i}-{j} collapsed to length {length:e}")]
    DegenerateBond { i: usize, j: usize, length: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("zero pivot at row {row} during factorization")]
    ZeroPivot { row: usize },

    #[error("linear solve residual {residual:e} above tolerance {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("dynamic relaxation did not converge: residual {residual:e} after {iterations} iterations")]
    AdrNotConverged { iterations: usize, residual: f64 },

    #[error("dynamic relaxation diverged at iteration {iteration}")]
    AdrDiverged { iteration: usize },

    #[error("time step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown example id `{0}`")]
    UnknownExample(String),

    #[error("kernel value {value} outside [0, 1] at pair ({i}, {j})")]
    KernelOutOfRange { i: usize, j: usize, value: f64 },

    #[error("eigensolver did not converge after {restarts} restarts (residuals: {residuals:?})")]
    NoConvergence { restarts: usize, residuals: Vec<f64> },

    #[error("dense eigendecomposition failed: {0}")]
    Decomposition(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("no triangles to recover")]
    NoTriangles,

    #[error("node {0} is isolated")]
    IsolatedNode(usize),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("expression error: {0}")]
    Expression(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

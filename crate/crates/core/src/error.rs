use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid block partition: {0}")]
    InvalidPartition(String),

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("matrix is not symmetric (relative asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("block index {index} out of range for {blocks} blocks")]
    BlockIndex { index: usize, blocks: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("power iteration did not converge in {iterations} iterations (best estimate {estimate:e})")]
    NoConvergence { iterations: usize, estimate: f64 },

    #[error("backtracking exceeded {0} growth steps; objective does not look smooth along this step")]
    BacktrackOverflow(usize),

    #[error("non-finite objective value at iteration {0}")]
    NonFinite(usize),

    #[error("operation requires a finite-sum objective")]
    RequiresFiniteSum,

    #[error("instance format error on line {line}: {msg}")]
    Format { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

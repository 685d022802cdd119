use thiserror::Error;

/// Errors raised by frame construction, the objective, the solver and the
/// rounding pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameError {
    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("frame has {columns} pooled columns but ambient dimension {dim}")]
    Undersized { columns: usize, dim: usize },

    #[error("need n > d (n = {n}, d = {d})")]
    TooFewBlocks { n: usize, d: usize },

    #[error("weights sum to {sum}, expected d = {dim}")]
    WeightSum { sum: String, dim: usize },

    #[error("not a matrix frame: {0}")]
    NotMatrixFrame(String),

    #[error("numerical domain error: {0}")]
    Domain(String),

    #[error("block {0} is zero")]
    ZeroBlock(usize),

    #[error("enumeration of {count} minors exceeds size guard {guard}")]
    SizeGuard { count: u128, guard: u128 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("solver did not converge: {0}")]
    NotConverged(String),

    #[error("perturbation retry budget exhausted after {attempts} attempts: {detail}")]
    RetryBudget { attempts: usize, detail: String },
}

pub type Result<T> = std::result::Result<T, FrameError>;

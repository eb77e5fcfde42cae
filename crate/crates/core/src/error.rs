use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("field has nonzero mean {mean:e} (tolerance {tol:e})")]
    NonZeroMean { mean: f64, tol: f64 },

    #[error("field is not divergence-free: |div v| = {defect:e} (tolerance {tol:e})")]
    NotSolenoidal { defect: f64, tol: f64 },

    #[error("history has {got} nodes, grid needs {need}")]
    InsufficientHistory { got: usize, need: usize },

    #[error("picard iteration diverged after {iterations} iterations (last residual {residual:e})")]
    Diverged { iterations: usize, residual: f64 },

    #[error("time grid too coarse: {0} intervals")]
    GridTooCoarse(usize),

    #[error("only {found} shells above the floor, need at least {need}")]
    TooFewModes { found: usize, need: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

use thiserror::Error;

use crate::groups::Group;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("group mismatch: {left:?} vs {right:?}")]
    GroupMismatch { left: Group, right: Group },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not an element of {group:?} (residual {residual:e})")]
    NotInGroup { group: Group, residual: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("logarithm undefined: rotation angle within the cut at pi (trace {trace})")]
    LogSingularity { trace: f64 },
    #[error("ambient matrix is not tangent at its base (residual {residual:e})")]
    NotTangent { residual: f64 },
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("noise trace exhausted at step {step} (length {len})")]
    TraceExhausted { step: usize, len: usize },
    #[error("usage: {0}")]
    Usage(String),
    #[error("divergence guard tripped at t = {time}: cost {cost:e}")]
    Diverged { time: f64, cost: f64 },
}

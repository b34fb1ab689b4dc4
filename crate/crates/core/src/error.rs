use thiserror::Error;

/// Every failure a checker or constructor can surface.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("invalid space: {0}")]
    InvalidSpace(String),
    #[error("invalid event: {0}")]
    InvalidEvent(String),
    #[error("conditioning on a null event: {0}")]
    NullCondition(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("arity mismatch: expected {expected}, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("no solution found (best residual {residual:e}): {reason}")]
    NoSolution { residual: f64, reason: String },
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("model incomplete: {0}")]
    ModelIncomplete(String),
    #[error("degenerate dynamics: {0}")]
    DegenerateDynamics(String),
    #[error("rank {rank} out of range (dynamics defined through {max})")]
    RankOutOfRange { rank: usize, max: usize },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

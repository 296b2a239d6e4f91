use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("vertex {vertex} out of range for n = {n}")]
    InvalidVertex { vertex: usize, n: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("matrix carries no planted clique")]
    MissingPlant,
    #[error("infeasible overlap z = {z}: {reason}")]
    InfeasibleOverlap { z: usize, reason: String },
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn domain(msg: impl Into<String>) -> LabError {
    LabError::Domain(msg.into())
}

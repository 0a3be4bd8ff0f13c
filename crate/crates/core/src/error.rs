use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vector length {got} does not match node count {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("node {node} out of range for a graph on {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("invalid edge weight {0}")]
    InvalidWeight(f64),
    #[error("node set has zero volume")]
    ZeroVolume,
    #[error("requested {requested} eigenvalues but only {available} non-isolated nodes")]
    TooFewNodes { requested: usize, available: usize },
    #[error("nodes {0} and {1} are not connected")]
    Disconnected(usize, usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("accumulator is not positive definite")]
    NotPositiveDefinite,
    #[error("NCut is undefined: every cluster has zero volume")]
    UndefinedNcut,
    #[error("partitions have different cluster counts ({0} vs {1})")]
    ClusterCountMismatch(usize, usize),
    #[error("schedule error: {0}")]
    Schedule(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

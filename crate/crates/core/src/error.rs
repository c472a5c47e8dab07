use thiserror::Error;

/// Errors raised by the estimators, learners and generators in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("vertex {vertex} out of range for dimension {d}")]
    VertexOutOfRange { vertex: usize, d: usize },

    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("metric matrix is not symmetric at ({i}, {j})")]
    Asymmetric { i: usize, j: usize },

    #[error("graph contains a cycle")]
    Cyclic,

    #[error("tied metric values at edges {0} and {1}")]
    TiedMetric(String, String),

    #[error("empty crucial set")]
    EmptyCrucialSet,

    #[error("column {0} is constant")]
    ConstantColumn(usize),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("enumeration bound exceeded: d = {d} > {max}")]
    TooLarge { d: usize, max: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("replication {index}: {source}")]
    Replication { index: usize, source: Box<Error> },
}

pub type Result<T> = std::result::Result<T, Error>;

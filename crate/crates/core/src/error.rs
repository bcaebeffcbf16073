use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BapcError {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("design matrix is rank deficient (pivot {pivot:e} at column {column})")]
    RankDeficient { column: usize, pivot: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("neighborhood contains no points")]
    EmptyNeighborhood,
    #[error("empty sample")]
    EmptySample,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("objective is not finite at lambda = {0}")]
    NonFiniteObjective(f64),
    #[error("model kinds differ: {0} vs {1}")]
    ModelKindMismatch(&'static str, &'static str),
}

pub type Result<T> = std::result::Result<T, BapcError>;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported section [{section}] at line {line}: {hint}")]
    UnsupportedSection {
        section: String,
        line: usize,
        hint: &'static str,
    },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("pipe `{pipe}` references unknown node `{node}`")]
    DanglingNodeRef { pipe: String, node: String },

    #[error("network graph is not connected")]
    DisconnectedGraph,

    #[error("network has no fixed-head node")]
    NoFixedHead,

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("matrix is not positive definite (pivot {pivot:.3e} at column {col})")]
    NotPositiveDefinite { col: usize, pivot: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("sparsity pattern mismatch: {0}")]
    PatternMismatch(&'static str),

    #[error("non-positive input: {0}")]
    NonPositiveInput(&'static str),

    #[error("headloss diagonal is identically zero (all pipes at zero flow)")]
    AllZeroDiagonal,

    #[error("index {index} out of range for {len} pipes")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("incidence matrix is rank deficient: {0}")]
    RankDeficient(String),

    #[error("loop system is indefinite; a loop with all zero flows is the usual cause")]
    AllZeroLoop,

    #[error("precomputed data does not match this network")]
    PrecomputeMismatch,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

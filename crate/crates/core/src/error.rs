use alloc::string::String;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite input")]
    NonFinite,
    #[error("curvature must be positive and finite, got {0}")]
    InvalidCurvature(f64),
    #[error("point is off the hyperboloid (residual {0:e})")]
    OffManifold(f64),
    #[error("Klein point outside the open unit ball (norm {0})")]
    OutsideKleinBall(f64),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("degenerate reference: point at the origin")]
    DegenerateReference,
    #[error("degenerate descriptor: pooled mean has zero norm")]
    DegenerateDescriptor,
    #[error("unknown id {0}")]
    UnknownId(usize),
    #[error("leaf/index mismatch: tree has {leaves} leaves, matrix has {rows} rows")]
    LeafMismatch { leaves: usize, rows: usize },
    #[error("instance too large for exact oracle: n = {n} > {max}")]
    TooLarge { n: usize, max: usize },
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite value in {0}")]
    NonFiniteTerm(&'static str),
    #[error("shape mismatch: {0}x{1} vs {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),
}

pub type Result<T> = core::result::Result<T, Error>;

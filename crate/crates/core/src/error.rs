use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operands live on different spaces: {0}")]
    SpaceMismatch(String),

    #[error("space has no grid coordinates")]
    MissingCoords,

    #[error("domain basis is rank deficient (relative singular value {0:e})")]
    RankDeficient(f64),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("map is not idempotent (defect {0:e})")]
    NotIdempotent(f64),

    #[error("domain has rank {rank} but the source space has dimension {dim}; refusing to extend a non-dense core")]
    NotSpanning { rank: usize, dim: usize },

    #[error("dual search did not converge: bounds [{lower:e}, {upper:e}]")]
    NonConvergence { lower: f64, upper: f64 },

    #[error("Hermite function of degree {degree} has magnitude {tail:e} at the grid edge (limit {limit:e})")]
    TailTooLarge { degree: usize, tail: f64, limit: f64 },

    #[error("causality verdict disagreement: {0}")]
    VerdictDisagreement(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

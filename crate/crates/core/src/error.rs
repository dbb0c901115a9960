use thiserror::Error;

/// Errors surfaced by the clustering pipeline and its building blocks.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates its documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A point lies outside the normalized domain `[0,1]^d`.
    #[error("out of domain: {0}")]
    OutOfDomain(String),

    /// The requested computation would materialize too large a universe.
    #[error("capacity exceeded: {0}")]
    CapacityExceeded(String),

    /// A randomized step drew a result too large to continue safely.
    #[error("resource limit: {0}")]
    ResourceLimit(String),
}

pub type Result<T> = std::result::Result<T, Error>;

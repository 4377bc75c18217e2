use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two discrete distributions were compared over different supports.
    #[error("support mismatch: left has {left} entries, right has {right}")]
    SupportMismatch { left: usize, right: usize },

    /// A matrix that must be symmetric positive definite failed its Cholesky factorization.
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    /// A structural invariant of an input object does not hold.
    #[error("invariant violation: {0}")]
    Invariant(String),

    /// An enumeration would exceed a configured size cap.
    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Incompatible matrix or vector dimensions.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Non-finite entries, malformed target encodings and similar.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Rejected configuration (dimension constraints, malformed stacks).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Arithmetic produced non-finite values.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A required precondition does not hold at the given inputs.
    #[error("precondition not met: {0}")]
    Precondition(String),

    /// The requested construction does not exist for these inputs.
    #[error("construction infeasible: {0}")]
    Infeasible(String),

    /// Iterative solve stopped before reaching tolerance.
    #[error("solver did not converge: {0}")]
    Convergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;

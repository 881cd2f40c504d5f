use thiserror::Error;

/// Errors produced while building system models or evaluating closed forms.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A run configuration violates one of its invariants.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Eigenvalue truncation removed every eigenvalue.
    #[error("degenerate cluster: no eigenvalue above the truncation threshold")]
    DegenerateCluster,

    /// The stacked eigenvector matrix leaves no null space to transmit in.
    #[error("no interference-free dimensions: null space of the stacked eigenvector matrix is empty")]
    NoNullSpace,

    /// A matrix that must be invertible is singular.
    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    /// An argument is outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Crate-wide error type.
///
/// The variants map onto the process exit codes used by the CLI:
/// validation failures exit with 2, solver non-convergence with 3 and
/// numerical failures with 4.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on user-supplied data was violated.
    #[error("validation error: {0}")]
    Validation(String),

    /// An iterative solver failed to converge.
    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    /// A numerical operation produced an unusable result
    /// (singular matrix, non-finite integrand, ...).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Two evaluation routes that must agree by construction disagreed.
    /// This always signals an implementation bug, never bad input.
    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

impl Error {
    /// Exit code the CLI maps this error onto.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) => 2,
            Error::NonConvergence(_) => 3,
            Error::Numerical(_) | Error::Internal(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

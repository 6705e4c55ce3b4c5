use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuvaError {
    #[error("register size {n_qubits} outside the supported range 1..={max}")]
    Size { n_qubits: usize, max: usize },

    #[error("qubit index {index} out of range for a {n_qubits}-qubit register")]
    Index { index: usize, n_qubits: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("no periodic solution: {0}")]
    Infeasible(String),

    #[error("integration diverged: {0}")]
    Unstable(String),
}

pub type Result<T, E = QuvaError> = std::result::Result<T, E>;

pub(crate) fn argument(msg: impl Into<String>) -> QuvaError {
    QuvaError::Argument(msg.into())
}

pub(crate) fn validation(msg: impl Into<String>) -> QuvaError {
    QuvaError::Validation(msg.into())
}

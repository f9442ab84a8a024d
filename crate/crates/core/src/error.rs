use thiserror::Error;

/// Failure classes shared by every module of the engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Inputs violate an operation's preconditions.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A many-body sector or dense operator would exceed the memory budget.
    #[error("capacity exceeded: {what} needs dimension {dim}, budget is {budget}")]
    Capacity {
        what: String,
        dim: u128,
        budget: u128,
    },

    /// A solver failed to meet its accuracy or stability requirements.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

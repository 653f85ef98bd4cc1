use thiserror::Error;

/// Errors raised by the simulator and optimizers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A configuration or simulation-size value is invalid.
    #[error("configuration error: {0}")]
    Config(String),
    /// A resource allocation violates the topology's constraints.
    #[error("infeasible allocation: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

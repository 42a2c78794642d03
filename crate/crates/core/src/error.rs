use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad configuration: unknown tokenizer or backend, out-of-range parameter.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input or score payload violates a data contract.
    #[error("validation error: {0}")]
    Validation(String),

    /// The scorer answered, but the answer does not match the wire contract.
    #[error("protocol error: {0}")]
    Protocol(String),

    /// The scorer could not be reached.
    #[error("transport error after {attempts} attempt(s) to {endpoint}: {message}")]
    Transport {
        endpoint: String,
        message: String,
        attempts: u32,
        retryable: bool,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn protocol(msg: impl Into<String>) -> Self {
        Error::Protocol(msg.into())
    }

    pub fn is_transport(&self) -> bool {
        matches!(self, Error::Transport { .. })
    }
}

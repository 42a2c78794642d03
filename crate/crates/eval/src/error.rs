use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{path}:{line}: {message}")]
    Schema {
        path: String,
        line: usize,
        message: String,
    },

    #[error("unknown dataset format `{0}` (expected `nq` or `longbench`)")]
    UnknownFormat(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("generation failed: {0}")]
    Generation(String),

    #[error(transparent)]
    Core(#[from] r2c_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = EvalError> = std::result::Result<T, E>;

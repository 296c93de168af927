use thiserror::Error;

/// Error type shared across the toolkit.
#[derive(Debug, Error)]
pub enum DubError {
    /// Invalid input or violated invariant. Maps to exit code 2 in the CLI.
    #[error("{0}")]
    Invalid(String),

    /// Failure of an external command (TTS adapter, etc.). Maps to exit code 3.
    #[error("external command failed: {0}")]
    External(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("wav error: {0}")]
    Wav(#[from] hound::Error),
}

impl DubError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        DubError::Invalid(msg.into())
    }

    pub fn external(msg: impl Into<String>) -> Self {
        DubError::External(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, DubError>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed document: {0}")]
    Malformed(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("pose has no z axis: {0}")]
    MissingZAxis(String),

    #[error("unresolved selector entry: {0}")]
    Unresolved(String),

    #[error("normalization undefined: {0}")]
    Normalization(String),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("invalid segments: {0}")]
    Segments(String),

    #[error("training diverged: {0}")]
    NonFinite(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

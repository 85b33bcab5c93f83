use thiserror::Error;

/// Crate-wide error type.
///
/// `Config` covers invalid parameters and malformed inputs; `Regime` marks
/// parameter sets under which a design formula loses meaning (for example an
/// inclusion probability reaching 1). The two are kept apart because the
/// command line maps both to a dedicated exit code while callers embedding
/// the library may want to retry regime errors with different parameters.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("regime error: {0}")]
    Regime(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

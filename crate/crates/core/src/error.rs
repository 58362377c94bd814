//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates a documented precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Input is structurally valid but too degenerate to process
    /// (e.g. fewer than two minutiae, zero-variance map).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A randomized operation produced an unusable result
    /// (e.g. every minutia was dropped).
    #[error("degenerate output: {0}")]
    DegenerateOutput(String),

    /// Malformed text in a minutia file.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Dimension or length mismatch between related objects.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Operation is not defined for this spectral-map kind.
    #[error("unsupported kind: {0}")]
    UnsupportedKind(String),

    /// The attenuation parameter is zero; reconstruction boundaries are undefined.
    #[error("channel useless: attenuation is zero")]
    ChannelUseless,

    /// Stored artifacts were produced under a different configuration
    /// (grid hash or code hash mismatch). Distinct from a verification reject.
    #[error("configuration mismatch: {0}")]
    Configuration(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

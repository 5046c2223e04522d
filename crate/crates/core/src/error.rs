use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid camera: {0}")]
    InvalidCamera(String),

    #[error("depth must be positive, got {0}")]
    NonPositiveDepth(f64),

    #[error("point projects to infinity (zero camera depth)")]
    ProjectionAtInfinity,

    #[error("dimension mismatch: {what} is {got:?}, expected {expected:?}")]
    DimensionMismatch { what: &'static str, got: (usize, usize, usize), expected: (usize, usize, usize) },

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quantized symbol out of range: {0}")]
    SymbolRange(f64),

    #[error("decode error: {0}")]
    Decode(String),

    #[error("parse error at byte offset {offset}: {msg}")]
    Parse { offset: usize, msg: String },

    #[error("unsupported format: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

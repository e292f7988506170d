use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("dense size limit exceeded: dimension {dim} > budget {budget}")]
    SizeLimit { dim: usize, budget: usize },
    #[error("basis mismatch: expected `{expected}`, found `{found}`")]
    BasisMismatch { expected: String, found: String },
    #[error("register index {index} out of range 0..{registers}")]
    InvalidIndex { index: usize, registers: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("state is not noisy: maximal correlation {0} is not below 1")]
    NotNoisy(f64),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("unsupported field degree {0} (supported: 1..=32)")]
    UnsupportedDegree(u32),
    #[error("field too small: 2^{t} must exceed {needed}")]
    FieldSize { t: u32, needed: usize },
    #[error("operator not normalized: squared 2-norm {0} exceeds 1")]
    Normalization(f64),
    #[error("degree 0 has no regularization threshold; use exact mode")]
    DegenerateDegree,
    #[error("enumeration limit exceeded: {0}")]
    EnumerationLimit(String),
    #[error("shape mismatch: {0}")]
    Mismatch(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

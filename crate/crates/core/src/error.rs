use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: String, reason: String },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("non-finite value encountered in {0}")]
    NonFinite(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl LabError {
    pub fn invalid(name: &str, reason: impl Into<String>) -> Self {
        LabError::InvalidArgument { name: name.to_string(), reason: reason.into() }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;

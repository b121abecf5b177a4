use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ForgeError {
    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimMismatch { expected: usize, got: usize, context: &'static str },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("cycle detected in circuit at gate {0}")]
    Cycle(usize),

    #[error("clamp width {xi_prime} is not below the circuit margin {margin}")]
    MarginTooSmall { xi_prime: f64, margin: f64 },

    #[error("certificate refused: {0}")]
    Refused(String),

    #[error("enumeration too large: {0}")]
    TooLarge(String),

    #[error("training diverged at step {step}: {reason}")]
    Diverged { step: usize, reason: String },

    #[error("serialization: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, ForgeError>;

impl From<serde_json::Error> for ForgeError {
    fn from(e: serde_json::Error) -> Self {
        ForgeError::Serde(e.to_string())
    }
}

pub fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(ForgeError::Invalid(msg.into()))
}

pub fn ensure_dim(expected: usize, got: usize, context: &'static str) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(ForgeError::DimMismatch { expected, got, context })
    }
}

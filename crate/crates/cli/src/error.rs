//! Errors mapped to exit codes: 1 for user errors, 2 for internal failures.

use std::fmt;

use forge_core::ForgeError;

#[derive(Debug)]
pub enum CliError {
    User(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::User(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::User(s) => write!(f, "error: {s}"),
            CliError::Internal(s) => write!(f, "internal error: {s}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ForgeError> for CliError {
    fn from(e: ForgeError) -> Self {
        match e {
            ForgeError::Invalid(_)
            | ForgeError::DimMismatch { .. }
            | ForgeError::Serde(_)
            | ForgeError::TooLarge(_)
            | ForgeError::MarginTooSmall { .. }
            | ForgeError::Cycle(_)
            | ForgeError::Refused(_) => CliError::User(e.to_string()),
            ForgeError::Overflow(_) | ForgeError::Diverged { .. } => CliError::Internal(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::User(format!("i/o: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::User(format!("json line {}, column {}: {e}", e.line(), e.column()))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

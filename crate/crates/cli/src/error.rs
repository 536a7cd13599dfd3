use thiserror::Error;

/// Failures of a CLI run, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable inputs or unwritable outputs.
    #[error("{0}")]
    Config(String),

    /// The computation itself broke down (non-finite iterates).
    #[error("numerical failure: {0}")]
    Numeric(rotset_core::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<rotset_core::Error> for CliError {
    fn from(e: rotset_core::Error) -> Self {
        if e.is_numeric() {
            CliError::Numeric(e)
        } else {
            CliError::Config(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("i/o: {e}"))
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

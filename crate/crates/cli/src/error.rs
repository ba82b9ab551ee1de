use std::fmt::Display;

use setgreedy_core::Error as CoreError;

/// Failures of a CLI command, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("bound violation: {0}")]
    Violation(String),

    #[error("resource cap: {0}")]
    Resource(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error(transparent)]
    Run(#[from] CoreError),
}

impl CliError {
    pub fn config(key: &str, e: impl Display) -> Self {
        CliError::Config(format!("{key}: {e}"))
    }

    pub fn io(what: impl Display, e: impl Display) -> Self {
        CliError::Io(format!("{what}: {e}"))
    }

    /// 0 success, 1 config or runtime error, 2 bound violation, 3 resource cap.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Violation(_) => 2,
            CliError::Resource(_) | CliError::Run(CoreError::CapExceeded { .. }) => 3,
            CliError::Run(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

use std::process::ExitCode;

/// Failure of a command, classified by exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad arguments.
    #[error("{0}")]
    Usage(String),
    /// A check, a scenario or a fit did not succeed.
    #[error("{0}")]
    Failed(String),
    /// Unreadable or malformed config, rulebank or data file.
    #[error("{0}")]
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Failed(_) => 2,
            CliError::Config(_) => 3,
        }
    }

    pub fn to_exit_code(&self) -> ExitCode {
        ExitCode::from(self.exit_code())
    }
}

pub(crate) fn config_err(context: impl std::fmt::Display, e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{context}: {e}"))
}

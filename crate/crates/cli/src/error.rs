use thiserror::Error;

/// Errors surfaced by the command-line tool.
#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Lib(#[from] softsep::Error),

    /// Bad arguments or inputs the user can fix.
    #[error("{0}")]
    Usage(String),

    /// A broken internal invariant.
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    /// 1 for user errors, 2 for internal invariant violations.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Internal(_) => 2,
            CliError::Lib(_) | CliError::Usage(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

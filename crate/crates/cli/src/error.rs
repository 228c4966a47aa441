use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable or malformed inputs, inconsistent shapes. Exit 1.
    #[error("{0}")]
    Input(String),
    /// Failures that are not the caller's fault, such as a failed write. Exit 2.
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

impl From<fhmm_core::Error> for CliError {
    fn from(e: fhmm_core::Error) -> Self {
        // every core error stems from the data or parameters supplied
        CliError::Input(e.to_string())
    }
}

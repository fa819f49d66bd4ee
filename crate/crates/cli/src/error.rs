use std::path::Path;

use fastforward::Error as CoreError;

/// Command failure, carrying the process exit code class.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or configuration values. Exit code 2.
    #[error("{0}")]
    Usage(String),
    /// Unreadable or unwritable files. Exit code 3.
    #[error("{0}")]
    Input(String),
    /// Malformed file contents. Exit code 4.
    #[error("{0}")]
    Format(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Input(_) => 3,
            CliError::Format(_) => 4,
        }
    }

    /// Classifies a library error raised while handling `path`.
    pub fn at(path: &Path, err: CoreError) -> Self {
        let msg = format!("{}: {err}", path.display());
        match err {
            CoreError::Io(_) => CliError::Input(msg),
            CoreError::InvalidConfig(_) => CliError::Usage(msg),
            _ => CliError::Format(msg),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        match err {
            CoreError::Io(e) => CliError::Input(e.to_string()),
            CoreError::InvalidConfig(m) => CliError::Usage(m),
            other => CliError::Format(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

//! Error taxonomy with the stable exit-code contract:
//! 0 success, 1 partial sweep failure, 2 configuration/schema error,
//! 3 numerical failure.

use gravispin_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{failed} of {total} sweep points failed")]
    PartialSweep { failed: usize, total: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    PartialFailure = 1,
    ConfigError = 2,
    NumericalError = 3,
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) | CliError::Io { .. } => ExitCode::ConfigError,
            CliError::Numerical(_) => ExitCode::NumericalError,
            CliError::PartialSweep { .. } => ExitCode::PartialFailure,
        }
    }

    pub fn io(path: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            // numerics discovered mid-computation
            CoreError::SingularMatrix { .. }
            | CoreError::InvalidProbability { .. }
            | CoreError::BadTrace { .. }
            | CoreError::NonHermitian { .. } => CliError::Numerical(e.to_string()),
            // everything else is a malformed request
            _ => CliError::Config(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

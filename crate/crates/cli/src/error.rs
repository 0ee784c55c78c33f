use std::process::ExitCode;

use sdlps_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// 0 success, 2 config, 3 domain (instability), 4 numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn to_exit(&self) -> ExitCode {
        ExitCode::from(self.exit_code())
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::NonPositiveRate { .. }
            | CoreError::InvalidParameter { .. }
            | CoreError::Parameterization { .. }
            | CoreError::PolicyFormat(_) => CliError::Config(msg),
            CoreError::Unstable { .. }
            | CoreError::Unstabilizable { .. }
            | CoreError::Domain(_)
            | CoreError::Truncation { .. } => CliError::Domain(msg),
            CoreError::Numerical(_) | CoreError::NoConvergence(_) => CliError::Numerical(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

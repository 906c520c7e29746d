use std::path::PathBuf;
use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// The configuration is malformed or inconsistent.
    #[error("{path}:{}{msg}", line.map(|l| format!("{l}: ")).unwrap_or_default())]
    Config { path: String, line: Option<usize>, msg: String },

    /// A computation failed on a configuration that validated.
    #[error("{method} at {series} failed: {source}")]
    Numerical { method: String, series: String, source: leocov::Error },

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config { .. } | CliError::Usage(_) => ExitCode::from(2),
            CliError::Numerical { .. } => ExitCode::from(3),
            CliError::Io { .. } => ExitCode::from(1),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

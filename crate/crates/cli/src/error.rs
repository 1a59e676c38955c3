use std::path::{Path, PathBuf};

/// Failures surfaced by the command-line tool, each with a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    InvalidInput(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::InvalidInput(_) | Self::Io { .. } | Self::Parse { .. } => 2,
            Self::Numerical(_) | Self::Internal(_) => 4,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }

    pub fn parse(path: &Path, message: impl Into<String>) -> Self {
        Self::Parse { path: path.to_path_buf(), message: message.into() }
    }
}

impl From<hyperpmom::Error> for CliError {
    fn from(e: hyperpmom::Error) -> Self {
        use hyperpmom::Error as E;
        match e {
            E::InvalidArgument(m) | E::InvalidInput(m) | E::Domain(m) => Self::InvalidInput(m),
            E::NumericalFailure(m) => Self::Numerical(m),
            E::Internal(m) => Self::Internal(m),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

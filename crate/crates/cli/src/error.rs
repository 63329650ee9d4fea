use std::path::{Path, PathBuf};

use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERDICT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}:{line}: {msg}")]
    Data { path: PathBuf, line: u64, msg: String },

    #[error("{path}: {msg}")]
    Input { path: PathBuf, msg: String },

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Core(#[from] distreg::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn data(path: &Path, line: u64, msg: impl Into<String>) -> Self {
        CliError::Data { path: path.to_path_buf(), line, msg: msg.into() }
    }

    pub fn input(path: &Path, msg: impl Into<String>) -> Self {
        CliError::Input { path: path.to_path_buf(), msg: msg.into() }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn exit_code(&self) -> i32 {
        use distreg::Error as E;
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data { .. } | CliError::Input { .. } | CliError::Io { .. } => EXIT_DATA,
            CliError::Core(E::InvalidParameter(_) | E::OutOfRange { .. } | E::Unsupported(_) | E::SizeGuard(_)) => {
                EXIT_USAGE
            }
            CliError::Core(_) => EXIT_DATA,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

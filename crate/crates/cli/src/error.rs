use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] aniso_core::Error),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 0 success, 1 validation, 2 I/O, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        use aniso_core::Error as E;
        match self {
            CliError::Config(_) => 1,
            CliError::Io { .. } => 2,
            CliError::Core(e) => match e {
                E::Io { .. } | E::Format(_) => 2,
                E::DegenerateProfile(_) => 3,
                _ => 1,
            },
        }
    }
}

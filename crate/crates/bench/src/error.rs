use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] mogd_core::Error),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", .path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{}: {message}", .path.display())]
    Parse { path: PathBuf, message: String },
}

impl BenchError {
    /// Process exit code for the CLI: 2 for configuration errors, 3 for I/O errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use mogd_core::Error as E;
        match self {
            BenchError::Config(_) => 2,
            BenchError::Core(E::Config(_) | E::UnknownProblem(_) | E::DuplicateProblem(_) | E::Format(_)) => 2,
            BenchError::Io { .. } | BenchError::Csv { .. } | BenchError::Parse { .. } => 3,
            BenchError::Core(E::Io { .. }) => 3,
            BenchError::Core(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;

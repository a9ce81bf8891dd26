use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// Replayed run did not reproduce its recorded report.
    pub const MISMATCH: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const INPUT: i32 = 3;
    pub const NUMERIC: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] tensorfill::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        source: tensorfill::Error,
    },
    #[error("{}: row {row}, column {col}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        row: usize,
        col: usize,
        msg: String,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("replay mismatch: recorded {recorded}, got {replayed}")]
    Mismatch { recorded: String, replayed: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use tensorfill::Error as E;
        let core = |e: &E| match e {
            E::Parameter(_) => exit::USAGE,
            E::Numeric(_) | E::Divergence { .. } => exit::NUMERIC,
            E::Shape(_) | E::Input(_) | E::Format(_) | E::Io(_) => exit::INPUT,
        };
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Core(e) | CliError::File { source: e, .. } => core(e),
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Json { .. } | CliError::Csv(_) => exit::INPUT,
            CliError::Mismatch { .. } => exit::MISMATCH,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

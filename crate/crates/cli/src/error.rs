use std::path::Path;
use std::process::ExitCode;

use crate::ingest::IngestError;

/// Process exit codes. Every failure maps to a nonzero code.
pub mod exit {
    pub const OK: u8 = 0;
    /// Bad flags or configuration; also what clap uses for parse errors.
    pub const USAGE: u8 = 2;
    /// Unreadable or malformed input data.
    pub const INGEST: u8 = 3;
    /// The LP was unbounded or the solver failed.
    pub const SOLVE: u8 = 4;
    /// A fit was produced but a verification check failed.
    pub const VERIFICATION: u8 = 5;
    /// Output could not be written.
    pub const IO: u8 = 6;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("solve failed: {0}")]
    Solve(levelfit::Error),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Ingest(_) => exit::INGEST,
            CliError::Solve(_) => exit::SOLVE,
            CliError::Verification(_) => exit::VERIFICATION,
            CliError::Io { .. } => exit::IO,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }
}

impl From<CliError> for ExitCode {
    fn from(e: CliError) -> Self {
        ExitCode::from(e.exit_code())
    }
}

impl From<levelfit::Error> for CliError {
    fn from(e: levelfit::Error) -> Self {
        use levelfit::Error as E;
        match e {
            E::Unbounded { .. } | E::Solver(_) => CliError::Solve(e),
            E::NotPositiveDefinite { .. } => CliError::Verification(e.to_string()),
            E::PointOutsideBox { .. } | E::DimensionMismatch { .. } | E::EmptyPointCloud => {
                CliError::Ingest(IngestError::Invalid(e.to_string()))
            }
            E::Io(source) => CliError::Io { path: "output".into(), source },
            other => CliError::Usage(other.to_string()),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

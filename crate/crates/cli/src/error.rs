use std::path::{Path, PathBuf};

use sinelab_core::Error;
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const CRITERION_FAILURE: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const IO: u8 = 3;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    BatchFile {
        path: PathBuf,
        #[source]
        source: Error,
    },

    #[error(transparent)]
    Core(#[from] Error),

    #[error("{failed} of {total} acceptance criteria failed")]
    CriteriaFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Io { .. } | CliError::BatchFile { .. } => exit::IO,
            CliError::Core(e) => match e {
                Error::Io(_) | Error::Format { .. } => exit::IO,
                Error::InvalidAtom(_)
                | Error::UnsupportedMomentOrder(_)
                | Error::InfeasibleMoments { .. }
                | Error::UnknownDescriptor(_)
                | Error::OutsideBulk(_)
                | Error::ArityMismatch { .. }
                | Error::UnknownTestFunction(_)
                | Error::InvalidArgument(_) => exit::USAGE,
                Error::NoConvergence { .. }
                | Error::Sample { .. }
                | Error::NegativeRadicand { .. }
                | Error::Calibration { .. } => exit::CRITERION_FAILURE,
            },
            CliError::CriteriaFailed { .. } => exit::CRITERION_FAILURE,
        }
    }
}

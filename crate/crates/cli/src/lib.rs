//! Command-line driver: model fitting from TREC runs, type-I and power
//! experiments, validity curves and one-shot significance tests.

pub mod args;
mod commands;
pub mod fit;
pub mod manifest;

use std::io;
use std::path::PathBuf;

use thiserror::Error;

use sdpower_core::experiments::{ExperimentError, SyntheticSpecError};
use sdpower_core::ingest::IngestError;
use sdpower_core::sdmodel::PersistError;

pub use args::Cli;
pub use commands::run;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("manifest {}: {reason}", path.display())]
    Manifest { path: PathBuf, reason: String },
    #[error("{}: {source}", path.display())]
    Ingest {
        path: PathBuf,
        #[source]
        source: IngestError,
    },
    #[error("{}: {source}", path.display())]
    Models {
        path: PathBuf,
        #[source]
        source: PersistError,
    },
    #[error("{}: {source}", path.display())]
    Synthetic {
        path: PathBuf,
        #[source]
        source: SyntheticSpecError,
    },
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("{0}")]
    Input(String),
    #[error("writing {}: {reason}", path.display())]
    Output { path: PathBuf, reason: String },
    /// Every trial of at least one test failed numerically. Outputs are
    /// still written.
    #[error("{0}")]
    AllTrialsFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::AllTrialsFailed(_) => 2,
            _ => 1,
        }
    }
}

//! Configuration, experiment drivers and artifact output for the `mbo`
//! command-line tool.

pub mod config;
pub mod experiments;
pub mod rng;
pub mod summary;

pub use config::{parse_config, ConfigError, ExperimentConfig, ExperimentKind, InitialData};
pub use experiments::{run_experiment, time_integrated_energies, time_integrated_energy};
pub use summary::Summary;

use mbo_core::{FieldError, MboError, TensionError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] MboError),
    #[error("{0}")]
    Validation(String),
}

impl From<FieldError> for HarnessError {
    fn from(e: FieldError) -> Self {
        HarnessError::Core(e.into())
    }
}

impl From<TensionError> for HarnessError {
    fn from(e: TensionError) -> Self {
        HarnessError::Core(e.into())
    }
}

//! Command-line entry points: CSV ingestion, resolved run configuration,
//! fitting with reproducible output bundles, simulation studies, and the
//! prior-calibration table.

mod config;
mod fit;
mod io;

pub use config::{resolve, CalibrateConfig, Command, FitConfig, RawConfig, SimulateConfig};
pub use fit::{cmd_calibrate, cmd_fit, cmd_simulate};
pub use io::{load_dataset, write_dataset, ColumnRoles};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Sim(#[from] crate::sim::SimError),
    #[error("calibration error: {0}")]
    Calibration(String),
}

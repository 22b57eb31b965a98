//! Experiment harness around `bbols-core`: Monte Carlo sweeps, bound curves,
//! spectrum occupancy and the text file formats used by the CLI.

pub mod config;
pub mod curves;
pub mod format;
pub mod io;
pub mod occupancy;
pub mod sweep;

pub use config::{Axis, ExperimentConfig, MatrixKind, Method, SuccessMetric};
pub use curves::{run_bound_curves, CustomGrid, Preset};
pub use occupancy::{occupancy_from_recovery, OccupancyReport};
pub use sweep::{run_sweep, CurvePoint, MethodStat};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("bound outside its valid regime: {0}")]
    Regime(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] bbols_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

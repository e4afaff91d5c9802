//! Driver for the `kvshape` command: configuration, synthetic data,
//! verification battery, reconstruction and spectrum runs, artifacts.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod verify;

pub use commands::{run, synth_measurements, Command, Measurements, Outcome};
pub use config::{parse_config, RunConfig};
pub use error::CliError;

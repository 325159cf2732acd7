//! Command-line front end: configuration, experiment presets, fits and output.

pub mod config;
pub mod error;
pub mod fit;
pub mod manifest;
pub mod output;
pub mod plot;
pub mod run;

pub use config::{parse_config, parse_config_str, ExperimentConfig};
pub use error::{CliError, CliResult, ConfigError};
pub use manifest::RunManifest;
pub use run::{run_preset, Preset, RunOptions};

//! Batch front end: configuration files, CSV persistence and the experiment
//! pipelines of the `causal-pat` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod files;

pub use config::{parse_config, RunConfig};
pub use error::{CliError, CliResult};

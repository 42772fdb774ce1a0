//! Configuration, file formats and subcommands of the `axibilayer` binary.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::CliError;
pub use config::{parse_config, ConfigError, RunConfig};

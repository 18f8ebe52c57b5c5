//! File formats and subcommands for the `activenet` command-line tool.

pub mod args;
pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use args::Cli;
pub use config::{parse_config, to_toml, Config, ConfigError, Source};
pub use error::{Category, CliError};
pub use run::{run, RunManifest};

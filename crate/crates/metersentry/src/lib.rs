//! Command-line tooling around `metersentry_core`: CSV and model-file I/O,
//! run configuration and the `metersentry` subcommands.

pub mod cli;
pub mod config;
pub mod csvio;
pub mod model_file;
pub mod output;

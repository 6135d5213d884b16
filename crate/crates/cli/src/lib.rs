//! Command-line companion to `dbsn-core`: experiment configs, dataset
//! and checkpoint files, deterministic reports, and the `dbsn` binary's
//! subcommand implementations.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod report;

pub use error::{CliError, Result};

//! Command-line front end: configuration parsing, experiment orchestration
//! and CSV output for the `hstlink` analysis library.

pub mod commands;
pub mod config;
pub mod error;
pub mod table;

pub use commands::{cmd_analyze, cmd_mc, cmd_tradeoff};
pub use config::{ExperimentConfig, Mode};
pub use error::CliError;
pub use table::Table;

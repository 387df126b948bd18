//! Command-line front end: synthetic data generation, profile analysis,
//! registration, rotation and the benchmark suites.

pub mod bench;
pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod svg;

pub use config::RunConfig;
pub use error::{CliError, Result};

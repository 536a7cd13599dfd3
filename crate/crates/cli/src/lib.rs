//! Library side of the `rotset` command-line tool: argument definitions,
//! validation into a [`RunConfig`], the subcommand implementations and the
//! netpbm image writers.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for numerical
//! failures.

// `!(x > 0.0)` and friends deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod image;

pub use args::Cli;
pub use config::RunConfig;
pub use error::CliError;

/// Validates, runs and writes. Output files are written after all
/// computation has finished.
pub fn run_cli(cli: &Cli) -> Result<(), CliError> {
    let config = RunConfig::from_cli(cli)?;
    let output = commands::run(&config)?;
    commands::write_artifacts(&output.artifacts)?;
    output.failure.map_or(Ok(()), Err)
}

//! Command-line front end for `tensorfill`: synthetic data, masks and
//! corruption, completion runs, evaluation and run manifests.

pub mod args;
pub mod commands;
pub mod error;
pub mod io;
pub mod manifest;

pub use args::Cli;
pub use error::{CliError, Result};

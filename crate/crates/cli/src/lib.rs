//! Command-line pipeline around `softsep`: benchmark generation, p-value
//! tables, discovery runs and evaluation reports.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

pub use error::{CliError, CliResult};

//! Command-line front end: index building, coalescing, search, evaluation
//! and latency benchmarking over fast-forward indexes.

pub mod commands;
pub mod config;
pub mod error;

pub use config::{Config, Mode};
pub use error::{CliError, CliResult};

//! Command-line harness around `posteriorflow-core`: experiment
//! configuration, synthetic-data generation, trace emission, cross-seed
//! comparison tables, and numerical validation suites.

pub mod commands;
pub mod compare;
pub mod config;
pub mod data;
pub mod error;
pub mod trace;
pub mod validate;

pub use error::CliError;

/// Everything here returns this alias; `main` maps the error to an exit
/// code.
pub type Result<T> = core::result::Result<T, CliError>;

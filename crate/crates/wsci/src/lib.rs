//! Std companion to `wsci-core`: text artifact formats, run configuration,
//! experiment reports and the command implementations behind the `wsci`
//! binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod report;

pub use config::{ConfigArgs, RunConfig};
pub use error::{CliError, Result};

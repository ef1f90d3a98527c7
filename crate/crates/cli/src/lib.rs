//! Batch command surface for the toolkit: run configuration, the check
//! groups behind each subcommand, the acceptance suite and JSON reports.

pub mod checks;
pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod suite;

pub use commands::{report_path, run, run_suite, Command, RunContext};
pub use config::{OscTarget, RunConfig, Slopes, Tolerances};
pub use error::CliError;
pub use report::{Check, Relation, Report};
pub use suite::{criterion, title, SuiteParams, CRITERIA};

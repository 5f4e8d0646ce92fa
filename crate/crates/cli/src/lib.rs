//! Front end for the multirate DCF model: scenario files, built-in
//! scenarios, table and CSV reports, and the figure reproductions.

pub mod builtin;
pub mod commands;
pub mod error;
pub mod report;
pub mod reproduce;
pub mod scenario_file;

pub use error::CliError;

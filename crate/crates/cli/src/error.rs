use std::path::PathBuf;

use dcf_core::dcf_sim::SimError;
use dcf_core::{OptError, ParamError, SolveError};
use thiserror::Error;

use crate::scenario_file::ScenarioFileError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("scenario file {0}")]
    ScenarioFile(#[from] ScenarioFileError),
    #[error("invalid scenario: {0}")]
    Params(#[from] ParamError),
    #[error("equilibrium solver: {0}")]
    Solve(#[from] SolveError),
    #[error("optimizer: {0}")]
    Optimize(#[from] OptError),
    #[error("simulator: {0}")]
    Simulate(#[from] SimError),
    #[error("cannot write {}: {message}", path.display())]
    Output { path: PathBuf, message: String },
    #[error("{context}: {source}")]
    Context {
        context: String,
        source: Box<CliError>,
    },
}

impl CliError {
    /// Process exit status for each error category. Usage errors share 2
    /// with clap's own argument errors.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::ScenarioFile(_) | CliError::Params(_) => 3,
            CliError::Solve(_) => 4,
            CliError::Optimize(_) => 5,
            CliError::Simulate(_) => 6,
            CliError::Output { .. } => 7,
            CliError::Context { source, .. } => source.exit_code(),
        }
    }

    /// Prefixes the message while keeping the exit category.
    pub fn context(self, context: impl Into<String>) -> Self {
        CliError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn context_keeps_category() {
        let e = CliError::from(OptError::NoImprovement).context("point 3");
        assert_eq!(e.exit_code(), 5);
        assert!(e.to_string().starts_with("point 3: optimizer:"));
    }
}

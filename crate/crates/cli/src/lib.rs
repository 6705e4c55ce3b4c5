//! Command-line harness: configuration, search orchestration, persistence and
//! SVG figures.

pub mod commands;
pub mod config;
pub mod output;
pub mod plot;
pub mod verify;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numerical failure at record {index}: {message}")]
    Record { index: usize, message: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("verification failed: {0}")]
    Verify(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verify(_) => 1,
            CliError::Config(_) => 2,
            CliError::Record { .. } | CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<quva_core::QuvaError> for CliError {
    fn from(e: quva_core::QuvaError) -> Self {
        use quva_core::QuvaError::*;
        match e {
            Size { .. } | Index { .. } | Argument(_) | Validation(_) => CliError::Config(e.to_string()),
            Numerical(_) | Consistency(_) | Infeasible(_) | Unstable(_) => CliError::Numerical(e.to_string()),
        }
    }
}

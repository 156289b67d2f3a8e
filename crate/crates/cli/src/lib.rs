//! Config-driven experiment runner for the `upsilon` laboratory.
//!
//! Every subcommand reads a JSON run configuration (see [`config`]), runs the matching library
//! operation and returns an [`Outcome`]: a CSV table, a verdict and a [`output::ResultRecord`]
//! that embeds the canonical configuration and its SHA-256 digest. Outputs depend only on the
//! configuration, which includes `seed` and `workers`.

pub mod commands;
pub mod config;
pub mod output;
pub mod specs;

use thiserror::Error;

pub use commands::{run, Outcome, Subcommand};
pub use config::SCHEMA;

/// Version tag written into every result record.
pub const ARTIFACT_VERSION: &str = concat!("upsilon-cli/", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Error)]
pub enum CliError {
    /// The configuration failed validation; nothing was computed.
    #[error("schema error: {0}")]
    Schema(String),
    #[error(transparent)]
    Operation(#[from] upsilon::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn schema(msg: impl Into<String>) -> Self {
        CliError::Schema(msg.into())
    }

    /// Machine-readable class of the error.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Schema(_) => "schema",
            CliError::Operation(_) => "operation",
            CliError::Io(_) => "io",
        }
    }

    /// The one-line JSON diagnostic printed on failure.
    pub fn diagnostic(&self) -> String {
        serde_json::json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Schema(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

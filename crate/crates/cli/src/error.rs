//! CLI errors and their exit codes.

use sofft_core::symexpr::ParseError;
use thiserror::Error;

/// Exit code for unreadable or malformed input.
pub const EXIT_PARSE: i32 = 2;
/// Exit code for inputs that parse but do not meet a derivation's
/// preconditions.
pub const EXIT_PRECONDITION: i32 = 3;
/// Exit code for a numeric check that ran and failed.
pub const EXIT_CHECK_FAILED: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid problem file {path}: {source}")]
    Toml {
        path: String,
        #[source]
        source: Box<toml::de::Error>,
    },
    #[error("in {context}: {source}\n  {text}\n  {marker}^", marker = " ".repeat(.source.offset()))]
    Expr {
        context: String,
        text: String,
        #[source]
        source: ParseError,
    },
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("{0}")]
    Precondition(String),
}

impl CliError {
    /// Process exit code for this error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Read { .. } | CliError::Toml { .. } | CliError::Expr { .. } | CliError::Grid(_) => EXIT_PARSE,
            CliError::Precondition(_) => EXIT_PRECONDITION,
        }
    }

    /// Wraps a derivation error as a precondition failure, keeping its text.
    pub fn precondition(e: impl std::fmt::Display) -> Self {
        CliError::Precondition(e.to_string())
    }
}

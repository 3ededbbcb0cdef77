//! Command-line front end: problem files, derivation commands, and
//! residual checks over the `sofft-core` engine.

pub mod commands;
pub mod error;
pub mod problem;

pub use commands::{analyze, check, dims_output, CheckOutcome, Emit, Format, Output};
pub use error::{CliError, EXIT_CHECK_FAILED, EXIT_PARSE, EXIT_PRECONDITION};
pub use problem::Problem;

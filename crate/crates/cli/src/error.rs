//! Process-level error type. Every variant maps to the usage/config exit
//! code; verification failures are ordinary results, not errors.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Configuration file missing, unreadable, or semantically invalid.
    Config(String),
    /// A report, certificate, or CSV file could not be written.
    Io(String),
    /// The library rejected a parameter combination at run time.
    Core(qcd_core::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config: {msg}"),
            CliError::Io(msg) => write!(f, "io: {msg}"),
            CliError::Core(err) => write!(f, "{err}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<qcd_core::Error> for CliError {
    fn from(err: qcd_core::Error) -> Self {
        CliError::Core(err)
    }
}

//! Error type shared by all modules of the crate.

use std::fmt;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Input and usage errors surfaced by the library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two objects that must agree in dimension (or alphabet size) do not.
    DimensionMismatch { expected: usize, got: usize },
    /// An operation mixing distribution families that must match.
    FamilyMismatch(String),
    /// A parameter is outside its admissible range.
    InvalidParameter(String),
    /// An operation was applied to a state that cannot accept it,
    /// e.g. stepping a procedure that has already stopped.
    InvalidState(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::FamilyMismatch(msg) => write!(f, "distribution family mismatch: {msg}"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::InvalidState(msg) => write!(f, "invalid state: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

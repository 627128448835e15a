use std::fmt;

use thiserror::Error;

/// Errors produced anywhere in the rotation pipeline or the study harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate projection: smallest singular value {0:e} is below 1e-12")]
    DegenerateProjection(f64),

    #[error("variable {row} has zero communality (row norm {norm:e})")]
    ZeroCommunality { row: usize, norm: f64 },

    #[error("variable {column} has zero variance")]
    DegenerateVariable { column: usize },

    #[error("not a valid correlation matrix: eigenvalue {0:e}")]
    InvalidCorrelation(f64),

    #[error("congruence undefined for a zero vector")]
    UndefinedCongruence,

    #[error("population needs at least {needed} cases, got {got}")]
    InsufficientCases { needed: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    InvalidInput,
    Numerical,
    Io,
}

impl ErrorClass {
    pub fn exit_code(self) -> u8 {
        match self {
            ErrorClass::InvalidInput => 1,
            ErrorClass::Numerical => 2,
            ErrorClass::Io => 3,
        }
    }
}

impl fmt::Display for ErrorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ErrorClass::InvalidInput => "invalid input",
            ErrorClass::Numerical => "numerical failure",
            ErrorClass::Io => "I/O failure",
        };
        f.write_str(s)
    }
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidInput(_)
            | Error::Config(_)
            | Error::InsufficientCases { .. } => ErrorClass::InvalidInput,
            Error::DegenerateProjection(_)
            | Error::ZeroCommunality { .. }
            | Error::DegenerateVariable { .. }
            | Error::InvalidCorrelation(_)
            | Error::UndefinedCongruence
            | Error::Domain(_) => ErrorClass::Numerical,
            Error::Io(_) => ErrorClass::Io,
            Error::Csv(e) => match e.kind() {
                csv::ErrorKind::Io(_) => ErrorClass::Io,
                _ => ErrorClass::InvalidInput,
            },
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

use std::fmt;

use pantolab::Error;
use serde_json::json;

/// Exit code when a verification ran but did not pass.
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INVALID_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    InvalidInput,
    Numeric,
}

#[derive(Debug, Clone)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::InvalidInput,
            message: message.into(),
        }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Numeric,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            Kind::InvalidInput => EXIT_INVALID_INPUT,
            Kind::Numeric => EXIT_NUMERIC,
        }
    }

    pub fn to_json(&self) -> String {
        let kind = match self.kind {
            Kind::InvalidInput => "invalid-input",
            Kind::Numeric => "numeric-failure",
        };
        json!({ "error": { "kind": kind, "message": self.message, "exit_code": self.exit_code() } }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::InvalidParameter(_)
            | Error::InvalidPrecision(_)
            | Error::Pole(_)
            | Error::RescaleToDeformedExp
            | Error::Domain(_)
            | Error::DiscontinuousInitial { .. }
            | Error::OutOfDomain { .. }
            | Error::UnsupportedBeta
            | Error::NonReal
            | Error::Divergent(_)
            | Error::Parse(_) => Self::input(message),
            Error::NonFiniteSample { .. }
            | Error::NoSignChange { .. }
            | Error::PrecisionExhausted { .. }
            | Error::NonConvergence { .. }
            | Error::QuadratureNonConvergence(_)
            | Error::InsufficientData(_)
            | Error::DegenerateFit(_)
            | Error::TooFewExtrema { .. } => Self::numeric(message),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::input(format!("i/o: {e}"))
    }
}

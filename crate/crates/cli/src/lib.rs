//! Command implementations behind the `epiwave` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

use std::fmt;

use epiwave_core::Error;

/// A failure with the process exit code it maps to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParams { .. }
            | Error::NoEndemicEquilibrium { .. }
            | Error::InvalidGrid(_)
            | Error::InvalidConfig(_) => 3,
            Error::InstabilityDetected { .. } | Error::StepTooLarge { .. } => 5,
            Error::SubcriticalR0 { .. } | Error::SpeedNotSupercritical { .. } => 6,
            _ => 1,
        };
        CliError::new(code, e.to_string())
    }
}

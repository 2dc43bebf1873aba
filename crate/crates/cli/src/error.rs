use std::fmt;

use fnls_core::FnlsError;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    /// The config file does not parse.
    Config,
    /// The config parses but breaks preconditions.
    Validation,
    Io,
    /// The computation itself failed (no convergence, non-finite state, ...).
    Computation,
    /// `verify` ran, and some check is above its threshold.
    VerificationFailed,
}

/// Printed as JSON on stdout when a command fails.
#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<String>,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Config, message: message.into(), violations: Vec::new() }
    }

    pub fn validation(violations: Vec<String>) -> Self {
        CliError {
            kind: ErrorKind::Validation,
            message: format!("{} violated precondition(s)", violations.len()),
            violations,
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Io, message: message.into(), violations: Vec::new() }
    }

    pub fn verification(failed: Vec<String>) -> Self {
        CliError {
            kind: ErrorKind::VerificationFailed,
            message: format!("{} check(s) above threshold", failed.len()),
            violations: failed,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Config | ErrorKind::Validation => 2,
            ErrorKind::VerificationFailed => 3,
            ErrorKind::Io | ErrorKind::Computation => 1,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&serde_json::json!({ "error": self })).expect("plain data")
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.message)?;
        for v in &self.violations {
            write!(f, "\n  {v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for CliError {}

impl From<FnlsError> for CliError {
    fn from(e: FnlsError) -> Self {
        match e {
            FnlsError::Domain(msg) => CliError::validation(msg.split("; ").map(String::from).collect()),
            FnlsError::Io(err) => CliError::io(err.to_string()),
            other => CliError { kind: ErrorKind::Computation, message: other.to_string(), violations: Vec::new() },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::io(e.to_string())
    }
}

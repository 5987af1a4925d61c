//! CLI-level error taxonomy mapped onto scriptable exit codes:
//! 0 success, 2 validation, 3 no solution, 4 numerical failure.

use std::fmt;

use mechsim_core::Error as CoreError;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    NoSolution(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::NoSolution(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::NoSolution(m) => write!(f, "no solution: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidConfig(_)
            | CoreError::DimensionMismatch { .. }
            | CoreError::FockTooSmall(_)
            | CoreError::ZeroCoupling
            | CoreError::WeakCouplingExceeded(_) => CliError::Validation(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

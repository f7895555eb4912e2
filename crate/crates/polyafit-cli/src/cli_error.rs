use std::fmt;

use polyafit::io::FormatError;
use polyafit::Error as SolverError;

use crate::{EXIT_DEGENERATE, EXIT_INPUT};

#[derive(Debug)]
pub enum CliError {
    Solver(SolverError),
    Format(FormatError),
    Input(String),
}

pub fn input_err(message: impl Into<String>) -> CliError {
    CliError::Input(message.into())
}

impl CliError {
    /// Maps failures onto the documented exit-code classes: solver
    /// diagnostics (divergence, boundary, degenerate data) versus malformed
    /// input or configuration.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Solver(err) => match err {
                SolverError::Diverged { .. }
                | SolverError::BoundaryMle { .. }
                | SolverError::SingularHessian
                | SolverError::DegenerateDenominator
                | SolverError::NoEffectiveRows => EXIT_DEGENERATE,
                _ => EXIT_INPUT,
            },
            CliError::Format(_) | CliError::Input(_) => EXIT_INPUT,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Solver(err) => err.fmt(f),
            CliError::Format(err) => err.fmt(f),
            CliError::Input(message) => f.write_str(message),
        }
    }
}

impl From<SolverError> for CliError {
    fn from(err: SolverError) -> Self {
        CliError::Solver(err)
    }
}

impl From<FormatError> for CliError {
    fn from(err: FormatError) -> Self {
        CliError::Format(err)
    }
}

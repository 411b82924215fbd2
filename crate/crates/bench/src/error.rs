use std::fmt;

use thiserror::Error;

/// Process exit codes of the command-line runner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExitStatus {
    Ok,
    /// A result was written but the solver did not converge.
    NonConverged,
    /// The config or suite did not validate; nothing was run.
    Validation,
    /// I/O or other runtime failure.
    Failure,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            Self::Ok => 0,
            Self::Failure => 1,
            Self::Validation => 2,
            Self::NonConverged => 3,
        }
    }
}

/// A schema or semantic error located by a dotted field path such as
/// `constraints[0].set.radius`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    pub path: String,
    pub message: String,
}

impl ValidationError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() || self.path == "." {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid config {source_name}: {error}")]
    Validation { source_name: String, error: ValidationError },
    #[error("{0}")]
    Io(String),
    #[error("solver failed: {0}")]
    Solver(String),
}

impl BenchError {
    pub fn validation(source_name: impl Into<String>, error: ValidationError) -> Self {
        Self::Validation {
            source_name: source_name.into(),
            error,
        }
    }

    pub fn io(context: impl fmt::Display, e: impl fmt::Display) -> Self {
        Self::Io(format!("{context}: {e}"))
    }

    pub fn exit_status(&self) -> ExitStatus {
        match self {
            Self::Validation { .. } => ExitStatus::Validation,
            Self::Io(_) | Self::Solver(_) => ExitStatus::Failure,
        }
    }
}

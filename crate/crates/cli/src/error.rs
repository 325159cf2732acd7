//! Errors surfaced by the command-line tool and their exit codes.

use std::fmt;

/// A configuration problem with an optional key and line.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub message: String,
    pub key: Option<String>,
    pub line: Option<usize>,
}

impl ConfigError {
    pub fn new(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            key: None,
            line: None,
        }
    }

    pub fn at(message: impl Into<String>, key: &str, line: Option<usize>) -> Self {
        Self {
            message: message.into(),
            key: Some(key.to_string()),
            line,
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(key) = &self.key {
            write!(f, "`{key}`: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),

    #[error("solver error{}: {source}", coordinate.as_ref().map(|c| format!(" at {c}")).unwrap_or_default())]
    Solver {
        source: lambda_eit::Error,
        coordinate: Option<String>,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// Solver failure annotated with the sweep coordinate that produced it.
    pub fn solver_at(source: lambda_eit::Error, coordinate: impl Into<String>) -> Self {
        CliError::Solver {
            source,
            coordinate: Some(coordinate.into()),
        }
    }

    /// Process exit code: 2 for configuration, 4 for fit non-convergence, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver { source, .. } => match source.root() {
                lambda_eit::Error::Fit { .. } => 4,
                lambda_eit::Error::Config(_) => 2,
                _ => 3,
            },
            CliError::Schema(_) | CliError::Io(_) => 3,
        }
    }
}

impl From<lambda_eit::Error> for CliError {
    fn from(source: lambda_eit::Error) -> Self {
        CliError::Solver {
            source,
            coordinate: None,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

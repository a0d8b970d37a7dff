use std::path::PathBuf;

use serde::Serialize;

/// Exit codes of the `levybox` binary.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Invalid or unknown configuration; `path` is the dotted field path.
    #[error("{path}: {reason}")]
    Config { path: String, reason: String },

    /// A library operation failed; carries the operation name and its inputs.
    #[error("{operation} ({params}): {source}")]
    Operation {
        operation: String,
        params: String,
        source: levybox::Error,
    },

    /// A run finished but some of its checks missed their tolerance.
    #[error("{operation}: {failed} check(s) exceeded tolerance; first: {first}")]
    ChecksFailed {
        operation: String,
        failed: usize,
        first: String,
    },

    /// A row failed schema validation; nothing was written.
    #[error("table {table}, row {row}: {reason}")]
    Table { table: String, row: usize, reason: String },

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

/// Single-line machine-readable error record written to stderr.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub class: &'static str,
    pub exit_code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(path: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps a library error, keeping where it came from.
    pub fn op(operation: &str, params: impl Into<String>, source: levybox::Error) -> Self {
        CliError::Operation {
            operation: operation.into(),
            params: params.into(),
            source,
        }
    }

    pub fn class(&self) -> &'static str {
        match self {
            CliError::Config { .. } => "config",
            CliError::Operation { source, .. } if !source.is_numerical() => "config",
            CliError::Operation { .. } | CliError::ChecksFailed { .. } | CliError::Table { .. } => "numerical",
            CliError::Io { .. } => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.class() {
            "config" => EXIT_CONFIG,
            "numerical" => EXIT_NUMERICAL,
            _ => EXIT_IO,
        }
    }

    pub fn record(&self) -> ErrorRecord {
        ErrorRecord {
            class: self.class(),
            exit_code: self.exit_code(),
            message: self.to_string(),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

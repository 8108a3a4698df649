//! Configuration, execution and output of `ionreg` runs.

pub mod config;
pub mod output;
pub mod run;

use std::path::PathBuf;

use serde_json::{json, Value};
use thiserror::Error;

use crate::config::Violation;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {}: {message}", path.display())]
    Read { path: PathBuf, message: String },

    #[error("{}line {line}, column {column}: {message}", path.as_ref().map(|p| format!("{}: ", p.display())).unwrap_or_default())]
    Parse {
        path: Option<PathBuf>,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{} configuration violation(s):\n{}", .0.len(), .0.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Violation>),

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Runtime(#[from] ionreg_core::Error),

    #[error("cannot write {}: {message}", path.display())]
    Write { path: PathBuf, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Read { .. } | CliError::Parse { .. } | CliError::Invalid(_) | CliError::Usage(_) => EXIT_CONFIG,
            CliError::Runtime(_) | CliError::Write { .. } => EXIT_RUNTIME,
        }
    }

    /// Machine-readable form printed on stderr.
    pub fn to_json(&self) -> Value {
        let detail = match self {
            CliError::Read { path, .. } => json!({ "path": path }),
            CliError::Parse {
                path, line, column, ..
            } => json!({ "path": path, "line": line, "column": column }),
            CliError::Invalid(v) => json!({ "violations": v }),
            CliError::Usage(_) => Value::Null,
            CliError::Runtime(e) => serde_json::to_value(e).unwrap_or(Value::Null),
            CliError::Write { path, .. } => json!({ "path": path }),
        };
        let kind = match self {
            CliError::Read { .. } => "read",
            CliError::Parse { .. } => "parse",
            CliError::Invalid(_) => "invalid_config",
            CliError::Usage(_) => "usage",
            CliError::Runtime(_) => "runtime",
            CliError::Write { .. } => "write",
        };
        json!({ "error": kind, "message": self.to_string(), "detail": detail })
    }
}

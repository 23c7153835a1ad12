use std::path::PathBuf;

use thiserror::Error;

/// Problems with the scenario itself; the CLI exits with status 2.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read scenario {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("line {line}: expected key=value, got '{text}'")]
    Syntax { line: usize, text: String },
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("key '{0}' is set twice")]
    Duplicate(String),
    #[error("missing required keys: {0}")]
    Missing(String),
    #[error("{key} = '{value}' is not {expected}")]
    Type {
        key: &'static str,
        value: String,
        expected: &'static str,
    },
    #[error("{key} = {value} is out of range: {reason}")]
    Range {
        key: String,
        value: String,
        reason: &'static str,
    },
    #[error("{key}: file {path} does not exist")]
    MissingFile { key: &'static str, path: PathBuf },
    #[error("{0}")]
    Invalid(String),
}

impl ConfigError {
    pub fn from_core(e: qlink_core::Error) -> Self {
        match e {
            qlink_core::Error::Domain { field, value, reason } => ConfigError::Range {
                key: field.to_string(),
                value: value.to_string(),
                reason,
            },
            other => ConfigError::Invalid(other.to_string()),
        }
    }
}

/// Failures while running a valid scenario.
#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] qlink_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl RunError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            RunError::Core(_) | RunError::Io { .. } => 3,
        }
    }
}

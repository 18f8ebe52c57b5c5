use std::io;
use std::path::PathBuf;

use activenet::ErrorCategory;
use thiserror::Error;

use crate::config::ConfigError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Config(#[from] ConfigError),

    /// A well-formed request refused by a validation rule (strict mode).
    #[error("{0}")]
    Rejected(String),

    #[error(transparent)]
    Core(#[from] activenet::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// Machine-readable error class, printed as `error[<name>]` and mapped to
/// the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Usage,
    Io,
    Validation,
    Numerical,
}

impl Category {
    pub fn name(self) -> &'static str {
        match self {
            Category::Usage => "usage",
            Category::Io => "io",
            Category::Validation => "validation",
            Category::Numerical => "numerical",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Category::Usage | Category::Io => 1,
            Category::Validation => 2,
            Category::Numerical => 3,
        }
    }
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn category(&self) -> Category {
        match self {
            CliError::Usage(_) => Category::Usage,
            CliError::Io { .. } => Category::Io,
            CliError::Config(_) | CliError::Rejected(_) => Category::Validation,
            CliError::Core(e) => match e.category() {
                ErrorCategory::Validation => Category::Validation,
                ErrorCategory::Numerical => Category::Numerical,
            },
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

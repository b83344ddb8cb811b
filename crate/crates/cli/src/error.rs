use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Numeric(#[from] modcool_core::Error),
    #[error("run dominated by divergence: {0}")]
    Divergence(String),
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// Process exit status: 2 for configuration problems, 3 for numeric
    /// failures (including output errors), 4 for divergence-dominated runs.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Config(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) | CliError::Csv(_) => 3,
            CliError::Divergence(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

use std::fmt;
use std::path::Path;

use ovnet_core::Error;

#[derive(Debug)]
pub enum CliError {
    /// Bad config, flags or input files. Exit code 2.
    Validation(String),
    /// The run itself failed. Exit code 3.
    Runtime(String),
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    /// Classifies a core error raised while working on `context`.
    pub fn from_core(context: &str, e: Error) -> Self {
        let msg = format!("{context}: {e}");
        match e {
            Error::DimensionMismatch { .. }
            | Error::InvalidInput(_)
            | Error::ZeroNormal
            | Error::ClassOutOfRange { .. }
            | Error::EmptyDataset
            | Error::NotDifferentiable { .. }
            | Error::Json(_)
            | Error::Csv(_) => CliError::Validation(msg),
            _ => CliError::Runtime(msg),
        }
    }

    /// Errors while reading an input file always count as validation errors.
    pub fn input(path: &Path, e: impl fmt::Display) -> Self {
        CliError::Validation(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Runtime(m) => write!(f, "run failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

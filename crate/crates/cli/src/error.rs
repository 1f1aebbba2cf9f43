use std::path::PathBuf;

use thiserror::Error;

pub const EX_UNKNOWN_PROBLEM: u8 = 2;
pub const EX_SOLVER: u8 = 3;
pub const EX_USAGE: u8 = 64;
pub const EX_DATAERR: u8 = 65;
pub const EX_NOINPUT: u8 = 66;
pub const EX_IOERR: u8 = 74;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown problem `{name}`; available: {}", ipocp::problems::REGISTRY.join(", "))]
    UnknownProblem { name: String },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Solver(String),
    #[error("{path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::UnknownProblem { .. } => EX_UNKNOWN_PROBLEM,
            CliError::Solver(_) => EX_SOLVER,
            CliError::Usage(_) => EX_USAGE,
            CliError::Malformed { .. } => EX_DATAERR,
            CliError::Read { .. } => EX_NOINPUT,
            CliError::Write { .. } => EX_IOERR,
        }
    }
}

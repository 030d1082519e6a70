//! File formats, reports and the command implementations behind the
//! `funnel-dae` binary.

pub mod cli;
pub mod format;
pub mod report;
pub mod selftest;
pub mod simulate;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const SELFTEST_FAILED: i32 = 1;
    pub const PARSE: i32 = 2;
    pub const PRECONDITION: i32 = 3;
    pub const FUNNEL: i32 = 4;
    pub const NEWTON: i32 = 5;
    pub const UNDERFLOW: i32 = 6;
    pub const IO: i32 = 7;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => exit::PARSE,
            CliError::Precondition(_) => exit::PRECONDITION,
            CliError::Io(_) | CliError::Csv(_) => exit::IO,
        }
    }
}

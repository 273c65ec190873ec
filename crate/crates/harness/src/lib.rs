//! Verification suites, corpus generation and report serialization for
//! `realinterp`, plus the `realinterp` command-line front end.

pub mod baselines;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod norms;
pub mod report;
pub mod suites;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Core(#[from] realinterp::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("internal: {0}")]
    Internal(String),
}

impl HarnessError {
    /// 2 for usage errors, 3 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

pub(crate) fn usage(msg: impl Into<String>) -> HarnessError {
    HarnessError::Usage(msg.into())
}

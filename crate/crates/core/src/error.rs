use std::path::PathBuf;

use thiserror::Error;

use crate::engine::ToppleMode;

pub type Result<T> = std::result::Result<T, ArwError>;

#[derive(Debug, Error)]
pub enum ArwError {
    #[error("site index {site} is outside the lattice of {volume} sites")]
    InvalidSite { site: usize, volume: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{mode:?} toppling rejected at site {site}: state {state}")]
    IllegalToppling {
        site: usize,
        mode: ToppleMode,
        state: String,
    },

    #[error("scripted instruction stack at site {site} has no instruction at index {index}")]
    ExhaustedStack { site: usize, index: u64 },

    #[error("linear solver did not converge (residual {residual:e} after {iterations} iterations)")]
    Solver { residual: f64, iterations: usize },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("I/O failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ArwError {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        ArwError::InvalidParameter(msg.into())
    }
}

impl From<serde_json::Error> for ArwError {
    fn from(e: serde_json::Error) -> Self {
        ArwError::Parse(e.to_string())
    }
}

//! Crate-wide error and result types.

use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or construction argument.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The objective produced NaN or an infinite value.
    #[error("objective returned non-finite value {value} at {position:?}")]
    NonFinite { value: f64, position: Vec<f64> },

    /// An external evaluator failed: spawn, wire protocol, timeout, or an
    /// explicit `ERR` response.
    #[error("evaluator error: {0}")]
    Evaluator(String),

    /// A score table could not be loaded or does not cover the grid.
    #[error("score table error: {0}")]
    Table(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// CSV encoding or decoding failure.
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    /// JSON encoding failure.
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    /// Failure inside one optimization iteration.
    #[error("iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    /// Failure in one run of a repeated experiment.
    #[error("run {run}: {source}")]
    Run {
        run: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        Error::Iteration { iteration, source: Box::new(self) }
    }

    pub(crate) fn in_run(self, run: usize) -> Self {
        Error::Run { run, source: Box::new(self) }
    }
}

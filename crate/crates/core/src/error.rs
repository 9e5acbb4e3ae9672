use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CdemError>;

#[derive(Debug, Error)]
pub enum CdemError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("B-side matrix not positive definite after shift {shift:e} (pivot {pivot:e} at {index}); try a shift of at least {suggested:e}")]
    NotPositiveDefinite {
        shift: f64,
        pivot: f64,
        index: usize,
        suggested: f64,
    },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<CdemError>,
    },
}

impl CdemError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CdemError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        CdemError::AtIteration {
            iteration,
            source: Box::new(self),
        }
    }
}

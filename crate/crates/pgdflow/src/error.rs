//! Crate-wide error type.

use std::path::PathBuf;

/// Errors raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed input file; `line` is 1-based.
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    /// Reading or writing a file failed.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// A structural invariant of the input does not hold.
    #[error("invalid input: {0}")]
    Invalid(String),
    /// A parameter value lies outside its admissible interval.
    #[error("parameter {index} = {value} outside [{lo}, {hi}]")]
    OutOfRange {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
    /// The mapped element has a nonpositive Jacobian determinant.
    #[error("element {element}: nonpositive mapped Jacobian determinant {det:e}")]
    InvertedElement { element: usize, det: f64 },
    /// A linear system could not be factorised or solved.
    #[error("singular system: {0}")]
    Singular(String),
    /// An enrichment produced a mode with zero amplitude.
    #[error("zero-amplitude mode")]
    ZeroMode,
    /// CSV output failed.
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::InvertedElement { .. } | Error::Singular(_) | Error::ZeroMode
        )
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

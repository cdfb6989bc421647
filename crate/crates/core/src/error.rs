use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty sample")]
    EmptySample,

    #[error("non-positive gap {0} in sample")]
    NonPositiveGap(f64),

    #[error("too few events: need at least {needed}, have {have}")]
    TooFewEvents { needed: usize, have: usize },

    #[error("degenerate categories: {0}")]
    DegenerateCategories(String),

    #[error("no calibration table for {0} events")]
    MissingCalibration(usize),

    #[error("every trial was untestable")]
    AllUntestable,

    #[error("too few values: need at least {needed}, have {have}")]
    TooFewValues { needed: usize, have: usize },

    #[error("{path}: no such file")]
    FileNotFound { path: PathBuf },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: no events left after filtering")]
    EmptyAfterFilter { path: PathBuf },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors that mark a catalog as too sparse to test, as opposed
    /// to a misconfigured run.
    pub fn is_untestable(&self) -> bool {
        matches!(
            self,
            Error::TooFewEvents { .. } | Error::DegenerateCategories(_) | Error::EmptySample
        )
    }

    /// Short stable identifier used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid-parameter",
            Error::EmptySample => "empty-sample",
            Error::NonPositiveGap(_) => "non-positive-gap",
            Error::TooFewEvents { .. } => "untestable",
            Error::DegenerateCategories(_) => "untestable",
            Error::MissingCalibration(_) => "missing-calibration",
            Error::AllUntestable => "all-untestable",
            Error::TooFewValues { .. } => "too-few-values",
            Error::FileNotFound { .. } => "file-not-found",
            Error::Parse { .. } => "parse",
            Error::EmptyAfterFilter { .. } => "empty-after-filter",
            Error::Io { .. } => "io",
            Error::Config(_) => "config",
        }
    }
}

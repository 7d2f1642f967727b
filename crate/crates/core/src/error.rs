use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the estimation, testing and projection pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: missing required column `{column}`")]
    Schema { path: PathBuf, column: String },

    #[error("{path}: row {row}, column `{column}`: cannot parse `{value}` as a number")]
    Parse {
        path: PathBuf,
        row: usize,
        column: String,
        value: String,
    },

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("scenario alignment error: {0}")]
    ScenarioAlignment(String),

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("numerical rank deficiency: {0}")]
    NumericalRank(String),

    #[error("numerical conditioning error: {0}")]
    Conditioning(String),

    #[error("parameter outside the admissible domain: {0}")]
    ParameterDomain(String),

    #[error("sample error: {0}")]
    Sample(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("sink feedback singularity in {year}: 1 + b1 + b2 = {denominator}")]
    FeedbackSingularity { year: i32, denominator: f64 },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input files or arguments rather than numerics.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Schema { .. }
                | Error::Parse { .. }
                | Error::Alignment(_)
                | Error::ScenarioAlignment(_)
                | Error::InvalidData(_)
                | Error::InvalidSpec(_)
                | Error::Io { .. }
                | Error::Csv(_)
                | Error::Json(_)
                | Error::Sample(_)
                | Error::DegenerateInput(_)
        )
    }
}

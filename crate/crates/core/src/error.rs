use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("series too short: length {len}, need more than {required}")]
    SeriesTooShort { len: usize, required: usize },

    #[error("mismatched lengths: y has {y} samples, u has {u}")]
    LengthMismatch { y: usize, u: usize },

    #[error("model has n_b = {n_b} input coefficients but the data has no input column `u`")]
    MissingInput { n_b: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parameter on the boundary of its support: {0}")]
    BoundaryValue(String),

    #[error("no posterior draws")]
    EmptyDraws,

    #[error("invalid probability level {0}, must lie in (0, 1)")]
    InvalidLevel(f64),

    #[error("observed series is constant; model fit is undefined")]
    ConstantSeries,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("split at {boundary} of {len} leaves fewer than {min} points on one side")]
    DegenerateSplit {
        boundary: usize,
        len: usize,
        min: usize,
    },

    #[error("{path}: missing required column `{column}`")]
    MissingColumn { path: PathBuf, column: String },

    #[error("{path}: file contains no data rows")]
    EmptyFile { path: PathBuf },

    #[error("{path}: row {row}: {message}")]
    MalformedRow {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("sampler aborted: {0}")]
    SamplerAbort(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad run configuration or adapter spec (missing column, overlapping
    /// column roles, invalid field values).
    #[error("configuration error: {0}")]
    Config(String),

    /// Dataset file does not exist or cannot be opened.
    #[error("dataset file not found: {}", .0.display())]
    DatasetNotFound(PathBuf),

    /// A cell of the source file could not be parsed.
    #[error("ingestion error at row {row}: {message}")]
    Ingestion { row: usize, message: String },

    /// Data violates a structural precondition, e.g. an empty (a, y) group.
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// An argument is outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A disparity metric is undefined because its conditioning subgroup is
    /// empty. Carries the name of the empty cell.
    #[error("metric undefined: empty subgroup {0}")]
    UndefinedMetric(String),

    /// The perturbation parameter t lies outside the feasible bracket.
    #[error("t = {t} outside feasible bracket [{lo}, {hi}]")]
    OutOfBracket { t: f64, lo: f64, hi: f64 },

    /// Bisection could not bracket the target disparity. Carries the
    /// endpoint measurements that defeated the sign conditions.
    #[error("calibration failed: {message} (D({lo_t}) = {lo_d}, D({hi_t}) = {hi_d})")]
    CalibrationFailure { message: String, lo_t: f64, lo_d: f64, hi_t: f64, hi_d: f64 },

    /// A numeric computation produced a non-finite value.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Too many per-seed failures in a benchmark run.
    #[error("benchmark run failed: {failed} of {total} seeds errored")]
    TooManyFailures { failed: usize, total: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable code, one per variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Config(_) => "CONFIG_ERROR",
            Error::DatasetNotFound(_) => "DATASET_NOT_FOUND",
            Error::Ingestion { .. } => "INGESTION_ERROR",
            Error::DegenerateData(_) => "DEGENERATE_DATA",
            Error::InvalidArgument(_) => "INVALID_ARGUMENT",
            Error::UndefinedMetric(_) => "UNDEFINED_METRIC",
            Error::OutOfBracket { .. } => "OUT_OF_BRACKET",
            Error::CalibrationFailure { .. } => "CALIBRATION_FAILURE",
            Error::Numeric(_) => "NUMERIC_ERROR",
            Error::TooManyFailures { .. } => "TOO_MANY_FAILURES",
            Error::Io(_) => "IO_ERROR",
            Error::Csv(_) => "CSV_ERROR",
            Error::Json(_) => "JSON_ERROR",
        }
    }

    /// True for errors caused by configuration or input rather than by the
    /// run itself (the CLI maps these to exit status 2).
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::DatasetNotFound(_)
                | Error::Ingestion { .. }
                | Error::DegenerateData(_)
                | Error::InvalidArgument(_)
        )
    }
}

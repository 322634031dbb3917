use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by ingestion, estimation and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("series length {len} is not a multiple of samples_per_day {period} (remainder {remainder})")]
    NotDivisible {
        len: usize,
        period: usize,
        remainder: usize,
    },

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("invalid functional: {0}")]
    InvalidFunctional(String),

    #[error("undefined real power: sample {value} raised to non-integer p={p}")]
    UndefinedPower { value: f64, p: f64 },

    #[error("curve lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error("second-derivative semi-metric needs at least 5 samples, got {0}")]
    GridTooShort(usize),

    #[error("invalid estimator configuration: {0}")]
    InvalidConfig(String),

    #[error("no learning covariate within bandwidth {h} of the query")]
    ZeroNeighborhood { h: f64 },

    #[error("conditional density vanishes on the whole response grid")]
    DegenerateDensity,

    #[error("k={k} out of range 1..={n}")]
    KOutOfRange { k: usize, n: usize },

    #[error("cross-validation failed for every candidate k")]
    CvFailed,

    #[error("relative error undefined for actual value 0")]
    ZeroActual,

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("no records to evaluate")]
    EmptyRecords,

    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("{path}: row {row}: {message}")]
    CsvRow {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("{path}: column '{column}' not found")]
    MissingColumn { path: PathBuf, column: String },

    #[error("{path}: no data rows")]
    NoDataRows { path: PathBuf },

    #[error("unsupported oracle: {0}")]
    UnsupportedOracle(String),

    #[error("invalid simulation config: {0}")]
    InvalidSimConfig(String),

    #[error("decomposition denominator is zero")]
    ZeroDenominator,

    #[error("config validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag used by the command-line front end.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NotDivisible { .. } | Error::InvalidSeries(_) | Error::InvalidCurve(_) => {
                "series"
            }
            Error::InvalidFunctional(_) | Error::UndefinedPower { .. } => "functional",
            Error::LengthMismatch { .. } | Error::GridTooShort(_) => "semimetric",
            Error::InvalidConfig(_) | Error::Validation(_) | Error::InvalidSimConfig(_) => {
                "config"
            }
            Error::ZeroNeighborhood { .. } | Error::DegenerateDensity => "estimator",
            Error::KOutOfRange { .. } | Error::CvFailed => "bandwidth",
            Error::ZeroActual | Error::InvalidSplit(_) | Error::EmptyRecords => "evaluation",
            Error::Csv { .. }
            | Error::CsvRow { .. }
            | Error::MissingColumn { .. }
            | Error::NoDataRows { .. } => "input",
            Error::UnsupportedOracle(_) | Error::ZeroDenominator => "diagnostics",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

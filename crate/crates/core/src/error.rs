//! Error type shared by every module of the crate.

use thiserror::Error;

use crate::model::Measure;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A model coefficient violates its sign or positivity constraint.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("initial segment: {0}")]
    InvalidSegment(String),

    /// Step size, delay and horizon do not line up on a common grid.
    #[error("grid: {0}")]
    Grid(String),

    #[error("time {t} outside [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    /// Terminal weight w outside the admissible half-open interval [0, w_max).
    #[error("w = {w} outside admissible domain [0, {w_max})")]
    WDomain { w: f64, w_max: f64 },

    #[error("expected parameters under the {expected:?} measure, got {found:?}")]
    MeasureMismatch { expected: Measure, found: Measure },

    /// Market price of risk is singular at a zero short rate.
    #[error("market price of risk is undefined at r(t) = 0")]
    ZeroRate,

    #[error("path carries no recorded noise increments")]
    MissingNoise,

    #[error("{0}")]
    Precondition(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("characteristic function evaluation failed at phi = {phi}: {reason}")]
    DomainEvaluation { phi: String, reason: String },

    #[error("damped integrand denominator vanishes at phi = {phi} (shift eta or alpha)")]
    ZeroDenominator { phi: f64 },

    #[error("quadrature did not converge (partial estimate {partial:e})")]
    Integration { partial: f64 },

    #[error("invalid noise variance {0}; must be > 0")]
    InvalidNoise(f64),

    #[error("fisher label mismatch: {0}")]
    LabelMismatch(String),

    #[error("day {0} has no options")]
    EmptyDay(NaiveDate),

    #[error("singular information matrix: {0}")]
    Singular(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("no call quotes admitted for day {0}")]
    NoCalls(NaiveDate),

    #[error("empty panel")]
    EmptyPanel,

    #[error("no admitted quotes for noise-variance estimate")]
    NoQuotes,

    #[error("{file}:{line}: {message}")]
    Schema {
        file: String,
        line: usize,
        message: String,
    },

    #[error("no rate available for {date} at {days} days")]
    MissingRate { date: NaiveDate, days: i64 },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

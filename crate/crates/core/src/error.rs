use thiserror::Error;

/// Errors raised by the analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("cannot take the logarithm of a non-positive power ({0} W)")]
    NonPositivePower(f64),

    #[error("nodes `{0}` and `{1}` are coincident")]
    CoincidentNodes(&'static str, &'static str),

    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),

    #[error("non-positive power consumption {value} W in {context}")]
    NonPositiveConsumption { context: &'static str, value: f64 },

    #[error("realization carries no phases")]
    MissingPhases,

    #[error("all polynomial coefficients are zero")]
    DegeneratePolynomial,

    #[error("derivative vanished at alpha = {alpha}")]
    DerivativeVanished { alpha: f64 },

    #[error("no crossover in range [{lower}, {upper}]")]
    NoCrossover { lower: f64, upper: f64 },

    #[error("trial {index} failed: {source}")]
    Trial {
        index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation received a parameter outside its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A coefficient that must be strictly positive (it appears in a ratio
    /// or a denominator) is zero.
    #[error("zero coefficient where a ratio is required: {0}")]
    ZeroCoefficient(String),

    /// A bound denominator came out non-positive, typically because the
    /// source ratio conditions do not hold or the sources are degenerate.
    #[error("non-positive denominator: {0}")]
    NonPositiveDenominator(String),

    /// A structural condition on the sources (ratio chain, determinant sign,
    /// pairwise-bound ordering) is violated beyond tolerance.
    #[error("source condition violated: {0}")]
    ConditionViolated(String),

    /// A gain of zero makes the associated error rate undefined.
    #[error("undefined error rate: gain is zero for {0}")]
    UndefinedErrorRate(String),

    /// An optimizer was handed an empty search interval.
    #[error("infeasible search interval: {0}")]
    Infeasible(String),

    /// A scenario configuration file could not be parsed.
    #[error("config error at line {line}, key `{key}`: {message}")]
    Config {
        line: usize,
        key: String,
        message: String,
    },

    #[error("unknown scenario `{0}` (not a built-in name and not a readable file)")]
    UnknownScenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

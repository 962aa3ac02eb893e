use thiserror::Error;

use crate::expr::ParseError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter out of range: {name} = {value} ({expected})")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("map validation failed: {invariant} (witness t = {witness})")]
    ValidationFailed { invariant: String, witness: f64 },

    #[error("no fixed point found: {0}")]
    NoFixedPoint(String),

    #[error("interval order violated: a = {a} must be < b = {b}")]
    OrderViolation { a: f64, b: f64 },

    #[error("fixed point s0 = {s0} lies outside the required range for [{a}, {b}]")]
    FixedPointOutside { a: f64, b: f64, s0: f64 },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("midpoint {midpoint} of [a, b] is not the fixed point s0 = {s0}")]
    MidpointNotFixedPoint { midpoint: f64, s0: f64 },

    #[error("orbit tail of u does not settle: {0}")]
    TailDivergent(String),

    #[error(transparent)]
    Parse(#[from] ParseError),
}

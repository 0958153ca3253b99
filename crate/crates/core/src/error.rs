use thiserror::Error;

use crate::expr::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("cannot evaluate `{what}` at ({x}, {y}): {source}")]
    Eval {
        what: &'static str,
        x: f64,
        y: f64,
        #[source]
        source: EvalError,
    },

    #[error("({x}, {y}) is off the discriminant curve (|Δ| = {delta:e})")]
    OffDiscriminant { x: f64, y: f64, delta: f64 },

    #[error("discriminant gradient vanishes near ({x}, {y})")]
    DegenerateDiscriminant { x: f64, y: f64 },

    #[error("metric coefficients vanish simultaneously at ({x}, {y})")]
    DegenerateMetric { x: f64, y: f64 },

    #[error("coefficient c vanishes at ({x}, {y}); swap the coordinates so that c ≠ 0")]
    ConventionViolated { x: f64, y: f64 },

    #[error("isotropic direction is transverse to the discriminant at ({x}, {y})")]
    TransversePoint { x: f64, y: f64 },

    #[error("({x}, {y}, {p}) is not a singular point of the lifted field")]
    NotSingular { x: f64, y: f64, p: f64 },

    #[error("start ({x}, {y}, {p}) is a singular point of the lifted field; launch it as a family")]
    SingularStart { x: f64, y: f64, p: f64 },

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("step budget of {0} exhausted")]
    MaxSteps(usize),

    #[error("{0} has no geodesic family")]
    NoFamily(String),

    #[error("too few samples for a fit: {found} < {needed}")]
    InsufficientSamples { found: usize, needed: usize },

    #[error("sample {index} is off the invariant surface (defect {defect:e})")]
    OffSurface { index: usize, defect: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("scenario: {0}")]
    Scenario(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn eval(what: &'static str, x: f64, y: f64, source: EvalError) -> Error {
        Error::Eval { what, x, y, source }
    }
}

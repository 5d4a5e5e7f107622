use thiserror::Error;

/// Everything that can go wrong in the measure calculus.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("atom weight must be positive and finite, got {0}")]
    NonPositiveWeight(f64),

    #[error("atom coordinate is not finite")]
    NonFiniteCoordinate,

    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("spacing {h} does not divide side length {side}")]
    NonDivisibleSpacing { h: f64, side: f64 },

    #[error("atom at {position:?} lies on a triadic boundary (3^{exponent} lattice)")]
    AtomOnBoundary { position: Vec<f64>, exponent: i32 },

    #[error("invalid weight vector: {0}")]
    InvalidWeights(String),

    #[error("measure has zero mass on {0}")]
    ZeroMass(String),

    #[error("cube {0} has zero mass")]
    EmptyCube(String),

    #[error("no admissible epsilon found below {eps_a} (atoms too close to cube boundaries)")]
    NoEpsilonCandidate { eps_a: f64 },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("linear program fault: {0}")]
    LpFault(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("generation {0} is not certified")]
    UncertifiedGeneration(i32),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("word {0} leaves the support (zero cylinder)")]
    ZeroCylinder(String),

    #[error("depth exhausted: {0}")]
    DepthExhausted(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

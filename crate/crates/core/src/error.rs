use thiserror::Error;

/// Errors produced by the analysis and verification routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension {0} is outside the supported range 1..={max}", max = crate::hypercube::MAX_DIMENSION)]
    InvalidDimension(usize),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("dimension {n} exceeds the limit {limit} for {what}")]
    DimensionTooLarge {
        n: usize,
        limit: usize,
        what: &'static str,
    },

    #[error("coordinate {i} is out of range for dimension {n}")]
    CoordinateOutOfRange { i: usize, n: usize },

    #[error("coefficients do not describe a Boolean function (value {value} at point {point})")]
    NotBoolean { point: usize, value: i64 },

    #[error("invalid symmetry: {0}")]
    InvalidSymmetry(String),

    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("theta {theta} outside the admissible interval [{lo}, {hi}]")]
    ThetaOutOfRange { theta: f64, lo: f64, hi: f64 },

    #[error("numerical inconsistency: {0}")]
    NumericalInconsistency(String),

    #[error("cubic degree collapse violated: |c4| = {c4:e}, |c5| = {c5:e}, scale = {scale:e}")]
    DegreeCollapseViolation { c4: f64, c5: f64, scale: f64 },

    #[error("sign pattern violation: {0}")]
    SignPatternViolation(String),

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("non-dictator maximizer: f = {f}, g = {g}, rho = {rho}, gap = {gap:e}")]
    NonDictatorMaximizer {
        f: String,
        g: String,
        rho: f64,
        gap: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

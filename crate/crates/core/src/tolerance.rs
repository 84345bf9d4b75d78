//! Numerical tolerances shared by the library, the CLI and the test suites.
//!
//! The Fourier layer is exact integer arithmetic, so every constant here only
//! guards floating-point work downstream of the correlation `rho`.

/// Slack when validating that floating probabilities are in `[0, 1]` or sum to one.
pub const PROB_SLACK: f64 = 1e-12;

/// Negative joint-law entries above `-CLAMP_SLACK` are clamped to zero.
pub const CLAMP_SLACK: f64 = 1e-12;

/// Default tolerance for entropic comparisons (gap nonnegativity, Lemma grids).
///
/// Double rounding in the entropy of a 2x2 law is on the order of 1e-15 for
/// n <= 5; the smallest nonzero gap observed in the exhaustive n <= 3 scans on
/// the default grid is several orders of magnitude larger (see README).
pub const ENTROPIC: f64 = 1e-9;

/// Default tolerance for declaring a pair an equality case (maximizer).
pub const MAXIMIZER: f64 = 1e-9;

/// Degree-4/5 coefficients of the expanded cubic must vanish relative to the
/// largest retained coefficient by this factor.
pub const DEGREE_COLLAPSE: f64 = 1e-10;

/// Bisection stops once the bracketing interval is at most this wide.
pub const ROOT_INTERVAL: f64 = 1e-13;

/// Number of scan points used to assert uniqueness of the positive root.
pub const ROOT_SCAN_POINTS: usize = 10_000;

/// Step for central finite differences used as derivative oracles.
pub const FD_STEP: f64 = 1e-5;

/// Relative agreement required between closed-form and finite-difference derivatives.
pub const FD_RELATIVE: f64 = 1e-6;

/// Floor for the denominator of the relative derivative error.
///
/// Derivatives pass through zero (e.g. the second derivative at its unique
/// root), where a pure relative metric is undefined. Below this magnitude the
/// comparison becomes absolute at `FD_RELATIVE * FD_RELATIVE_FLOOR`.
pub const FD_RELATIVE_FLOOR: f64 = 1e-3;

/// Relative error with the floor described at [`FD_RELATIVE_FLOOR`].
pub fn relative_error(value: f64, reference: f64) -> f64 {
    let denom = value.abs().max(reference.abs()).max(FD_RELATIVE_FLOOR);
    (value - reference).abs() / denom
}

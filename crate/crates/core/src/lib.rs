//! Fourier analysis of Boolean functions under correlated Rademacher inputs.
//!
//! For two Boolean functions `f, g` on `{-1,1}^n` and `n` i.i.d. copies of a
//! `rho`-correlated pair of uniform `±1` variables `(x, y)`, this crate
//! computes the exact joint law of `(f(X), g(Y))` from the Walsh–Hadamard
//! spectra, the mutual information `I(f(X); g(Y))`, and checks it against the
//! single-letter information `I(x; y)`. It also implements the analytic bound
//! machinery (`bounds`) used to certify the inequality on a grid, and the
//! symmetry-reduced exhaustive search (`search`) over small `n`.

pub mod bounds;
pub mod error;
pub mod hypercube;
pub mod information;
pub mod rng;
pub mod search;
pub mod source;
pub mod tolerance;

pub use error::{Error, Result};
pub use hypercube::{
    apply_symmetry, dictator, inverse_wht, noise_operator, wht, BooleanFunction, FourierExpansion,
    InputSymmetry,
};
pub use information::{binary_entropy, entropy, gap, mutual_information, source_mi, xi};
pub use search::{CanonicalKey, SearchMode, VerificationReport};
pub use source::{joint_distribution, theta_rho, Joint2x2, SourceModel};

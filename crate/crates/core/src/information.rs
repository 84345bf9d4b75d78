//! Entropy and mutual information in bits.

use crate::error::{Error, Result};
use crate::hypercube::{wht, BooleanFunction, FourierExpansion};
use crate::source::{check_rho, joint_distribution, Joint2x2, SourceModel};
use crate::tolerance::PROB_SLACK;

#[inline]
fn plogp(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        p * p.log2()
    }
}

fn check_probability(p: f64) -> Result<f64> {
    if !p.is_finite() || !(-PROB_SLACK..=1.0 + PROB_SLACK).contains(&p) {
        return Err(Error::Domain(format!("{p} is not a probability")));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// A finite probability vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidDistribution("empty vector".into()));
        }
        if entries
            .iter()
            .any(|&p| !p.is_finite() || !(-PROB_SLACK..=1.0 + PROB_SLACK).contains(&p))
        {
            return Err(Error::InvalidDistribution(format!(
                "{entries:?} has entries outside [0, 1]"
            )));
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > PROB_SLACK {
            return Err(Error::InvalidDistribution(format!("entries sum to {sum}")));
        }
        Ok(Self(entries))
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }
}

/// `h(p) = -p log2 p - (1-p) log2 (1-p)`, with `0 log 0 = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    let p = check_probability(p)?;
    Ok(h(p))
}

/// Unchecked binary entropy for internal callers with known-valid input.
#[inline]
pub(crate) fn h(p: f64) -> f64 {
    -plogp(p) - plogp(1.0 - p)
}

/// `H(p) = -sum p_i log2 p_i`, zero entries skipped.
pub fn entropy(p: &ProbVector) -> f64 {
    -p.0.iter().map(|&q| plogp(q)).sum::<f64>()
}

/// Entropy of raw entries after validation.
pub fn entropy_of(entries: &[f64]) -> Result<f64> {
    Ok(entropy(&ProbVector::new(entries.to_vec())?))
}

/// Admissible `theta` interval for biases `(a, b)`.
pub fn theta_range(a: f64, b: f64) -> (f64, f64) {
    let (na, nb) = (1.0 - a, 1.0 - b);
    ((-a * b).max(-na * nb), (a * nb).min(na * b))
}

/// `xi(theta, a, b) = h(a) + h(b) - H(ab+theta, a(1-b)-theta, (1-a)b-theta, (1-a)(1-b)+theta)`.
pub fn xi(theta: f64, a: f64, b: f64) -> Result<f64> {
    let a = check_probability(a)?;
    let b = check_probability(b)?;
    let (lo, hi) = theta_range(a, b);
    if !theta.is_finite() || theta < lo - PROB_SLACK || theta > hi + PROB_SLACK {
        return Err(Error::ThetaOutOfRange { theta, lo, hi });
    }
    Ok(xi_unchecked(theta, a, b))
}

pub(crate) fn xi_unchecked(theta: f64, a: f64, b: f64) -> f64 {
    let (na, nb) = (1.0 - a, 1.0 - b);
    let cells = [
        (a * b + theta).max(0.0),
        (a * nb - theta).max(0.0),
        (na * b - theta).max(0.0),
        (na * nb + theta).max(0.0),
    ];
    h(a) + h(b) + cells.iter().map(|&p| plogp(p)).sum::<f64>()
}

/// `I(f; g)` of a 2x2 joint law, as `sum p log2(p / (p_f p_g))`.
///
/// The divergence form avoids the cancellation of `h(a) + h(b) - H` for
/// nearly independent laws. The result is clamped at zero.
pub fn mutual_information(j: &Joint2x2) -> Result<f64> {
    j.validate()?;
    Ok(mi_unchecked(j))
}

pub(crate) fn mi_unchecked(j: &Joint2x2) -> f64 {
    let a = j.marginal_f();
    let b = j.marginal_g();
    let rows = [a, a, 1.0 - a, 1.0 - a];
    let cols = [b, 1.0 - b, b, 1.0 - b];
    let mut total = 0.0;
    for ((p, r), c) in j.cells().into_iter().zip(rows).zip(cols) {
        if p > 0.0 {
            total += p * (p / (r * c)).log2();
        }
    }
    total.max(0.0)
}

/// `I(x; y)` of the single-letter source, from its 2x2 law.
pub fn source_mi(rho: f64) -> Result<f64> {
    check_rho(rho)?;
    Ok(mi_unchecked(&SourceModel::new(rho)?.joint()))
}

/// Closed form `1 - h((1 + |rho|)/2)`.
pub fn source_mi_closed_form(rho: f64) -> Result<f64> {
    check_rho(rho)?;
    Ok(1.0 - h((1.0 + rho.abs()) / 2.0))
}

/// `I(x; y) - I(f(X); g(Y))`; nonnegative for every pair of Boolean functions.
pub fn gap(f: &BooleanFunction, g: &BooleanFunction, rho: f64) -> Result<f64> {
    gap_spectra(&wht(f), &wht(g), rho)
}

/// [`gap`] from precomputed spectra.
pub fn gap_spectra(f: &FourierExpansion, g: &FourierExpansion, rho: f64) -> Result<f64> {
    let j = joint_distribution(f, g, rho)?;
    Ok(source_mi(rho)? - mutual_information(&j)?)
}

//! Analytic bound machinery behind the inequality `I(f(X); g(Y)) <= I(x; y)`.
//!
//! The chain is: split `theta_1` into its positive and negative parts,
//! bound both via Cauchy–Schwarz, reduce to the boundary values of `theta_rho`,
//! and certify the scalar function `phi(rho, alpha, beta) >= 0` on its domain.
//! Every object here is numerically checkable; nothing is proved symbolically.
//!
//! Derivative formulas use natural logarithms with explicit `ln 2` divisors;
//! `phi`, `psi` and `gamma` themselves are in bits.

use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hypercube::FourierExpansion;
use crate::information::{h, xi_unchecked};
use crate::tolerance::{DEGREE_COLLAPSE, ENTROPIC, ROOT_INTERVAL, ROOT_SCAN_POINTS};

/// `C(a, b) = (a(1-b) + sqrt(a(1-a)b(1-b))) / 2`.
pub fn schwarz_constant(a: f64, b: f64) -> f64 {
    (a * (1.0 - b) + (a * (1.0 - a) * b * (1.0 - b)).sqrt()) / 2.0
}

// ----------------------------------------------------------------------
// tau split

/// Positive and negative parts of `theta_1`, as exact numerators over `4^(n+1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TauSplit {
    n: usize,
    plus: i64,
    minus: i64,
    abs_sum: i64,
    f_empty: i64,
    g_empty: i64,
}

impl TauSplit {
    fn denom(&self) -> f64 {
        4f64.powi(self.n as i32 + 1)
    }

    pub fn tau_plus(&self) -> f64 {
        self.plus as f64 / self.denom()
    }

    pub fn tau_minus(&self) -> f64 {
        self.minus as f64 / self.denom()
    }

    /// `theta_1 = tau_plus + tau_minus`.
    pub fn theta_one(&self) -> f64 {
        (self.plus + self.minus) as f64 / self.denom()
    }

    /// Exact numerators `(tau_plus, tau_minus)` over `4^(n+1)`.
    pub fn numerators(&self) -> (i64, i64) {
        (self.plus, self.minus)
    }

    /// `tau_plus - tau_minus <= sqrt(a(1-a)b(1-b))`, checked in integers.
    ///
    /// In scaled units both sides square to
    /// `(sum |F G|)^2 <= (4^n - F_0^2)(4^n - G_0^2)`.
    pub fn schwarz_holds(&self) -> bool {
        let full = 1i128 << (2 * self.n);
        let lhs = (self.abs_sum as i128).pow(2);
        let f0 = self.f_empty as i128;
        let g0 = self.g_empty as i128;
        lhs <= (full - f0 * f0) * (full - g0 * g0)
    }
}

/// Splits `theta_1` by the sign of `f^(S) g^(S)` over nonempty `S`.
pub fn tau_split(f: &FourierExpansion, g: &FourierExpansion) -> Result<TauSplit> {
    if f.n() != g.n() {
        return Err(Error::DimensionMismatch {
            left: f.n(),
            right: g.n(),
        });
    }
    let (mut plus, mut minus) = (0i64, 0i64);
    for (&x, &y) in f.scaled().iter().zip(g.scaled()).skip(1) {
        let p = x * y;
        if p > 0 {
            plus += p;
        } else {
            minus += p;
        }
    }
    Ok(TauSplit {
        n: f.n(),
        plus,
        minus,
        abs_sum: plus - minus,
        f_empty: f.scaled_coeff(0),
        g_empty: g.scaled_coeff(0),
    })
}

/// Applies the output negations and the swap that bring a pair to `1/2 <= a <= b`.
pub fn normalize_pair(
    f: &FourierExpansion,
    g: &FourierExpansion,
) -> Result<(FourierExpansion, FourierExpansion)> {
    let orient = |e: &FourierExpansion| -> Result<FourierExpansion> {
        if e.scaled_coeff(0) < 0 {
            FourierExpansion::from_scaled(e.n(), e.scaled().iter().map(|c| -c).collect())
        } else {
            Ok(e.clone())
        }
    };
    let (f, g) = (orient(f)?, orient(g)?);
    if f.bias() <= g.bias() {
        Ok((f, g))
    } else {
        Ok((g, f))
    }
}

// ----------------------------------------------------------------------
// theta interval and the constants of the reduction

fn check_open_unit(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {v} outside (0, 1)")))
    }
}

fn check_oriented(rho: f64, a: f64, b: f64) -> Result<()> {
    if !(rho.is_finite() && (0.0..=1.0).contains(&rho)) {
        return Err(Error::Domain(format!("rho = {rho} outside [0, 1]")));
    }
    if !(0.5 <= a && a <= b && b < 1.0) {
        return Err(Error::Domain(format!(
            "biases (a, b) = ({a}, {b}) violate 1/2 <= a <= b < 1"
        )));
    }
    Ok(())
}

/// `[theta_rho^-, theta_rho^+]`, the interval that contains `theta_rho` for
/// every pair with biases `1/2 <= a <= b < 1`.
pub fn theta_interval(rho: f64, a: f64, b: f64) -> Result<(f64, f64)> {
    check_oriented(rho, a, b)?;
    let (na, nb) = (1.0 - a, 1.0 - b);
    let root = (a * na * b * nb).sqrt();
    let lo = (-na * nb).max(-rho * (na * nb + root) / 2.0);
    let hi = (a * nb).min(rho * (a * nb + root) / 2.0);
    Ok((lo, hi))
}

/// The constants `rho_-`, `rho_o`, `rho_+` attached to `(alpha, beta)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LemmaConstants {
    pub alpha: f64,
    pub beta: f64,
    pub c: f64,
    /// `max{alpha beta, (1-alpha)(1-beta)} / C`.
    pub rho_minus: f64,
    /// `min{alpha beta, (1-alpha)(1-beta)} / C`.
    pub rho_circ: f64,
    /// `alpha (1-beta) / C`, the upper end of the domain of `phi`.
    pub rho_plus: f64,
}

impl LemmaConstants {
    /// Requires `0 < alpha <= beta < 1`.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        check_pair(alpha, beta)?;
        let c = schwarz_constant(alpha, beta);
        let (p, q) = (alpha * beta, (1.0 - alpha) * (1.0 - beta));
        Ok(Self {
            alpha,
            beta,
            c,
            rho_minus: p.max(q) / c,
            rho_circ: p.min(q) / c,
            rho_plus: alpha * (1.0 - beta) / c,
        })
    }
}

fn check_pair(alpha: f64, beta: f64) -> Result<()> {
    check_open_unit("alpha", alpha)?;
    check_open_unit("beta", beta)?;
    if alpha > beta {
        return Err(Error::Domain(format!(
            "alpha = {alpha} exceeds beta = {beta}"
        )));
    }
    Ok(())
}

/// All bound quantities for a normalized pair of biases at correlation `rho`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundSet {
    pub a: f64,
    pub b: f64,
    pub c_ab: f64,
    /// `min{rho, a(1-b)/C(a,b)}`.
    pub rho_plus_point: f64,
    /// `min{rho, (1-a)(1-b)/C(1-a,b)}`.
    pub rho_minus_point: f64,
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub rho_minus_def: f64,
    pub rho_circ: f64,
    pub rho_plus_def: f64,
}

impl BoundSet {
    pub fn new(rho: f64, a: f64, b: f64) -> Result<Self> {
        let (theta_lo, theta_hi) = theta_interval(rho, a, b)?;
        let consts = LemmaConstants::new(a, b)?;
        let (na, nb) = (1.0 - a, 1.0 - b);
        Ok(Self {
            a,
            b,
            c_ab: consts.c,
            rho_plus_point: rho.min(a * nb / consts.c),
            rho_minus_point: rho.min(na * nb / schwarz_constant(na, b)),
            theta_lo,
            theta_hi,
            rho_minus_def: consts.rho_minus,
            rho_circ: consts.rho_circ,
            rho_plus_def: consts.rho_plus,
        })
    }
}

// ----------------------------------------------------------------------
// phi and its derivatives

fn check_phi_domain(rho: f64, alpha: f64, beta: f64, inclusive: bool) -> Result<LemmaConstants> {
    let k = LemmaConstants::new(alpha, beta)?;
    let upper_ok = if inclusive {
        rho <= k.rho_plus * (1.0 + 1e-12)
    } else {
        rho < k.rho_plus
    };
    if !(rho.is_finite() && rho >= 0.0 && upper_ok) {
        return Err(Error::Domain(format!(
            "rho = {rho} outside [0, {}{} for (alpha, beta) = ({alpha}, {beta})",
            k.rho_plus,
            if inclusive { "]" } else { ")" }
        )));
    }
    Ok(k)
}

/// `phi(rho, alpha, beta) = 1 - h((1+rho)/2) - xi(rho C(alpha,beta), alpha, beta)`.
///
/// Defined for `0 < alpha <= beta < 1` and `0 <= rho <= alpha(1-beta)/C`.
pub fn phi(rho: f64, alpha: f64, beta: f64) -> Result<f64> {
    let k = check_phi_domain(rho, alpha, beta, true)?;
    let rho = rho.min(k.rho_plus);
    Ok(1.0 - h((1.0 + rho) / 2.0) - xi_unchecked(rho * k.c, alpha, beta))
}

/// Closed-form `(phi', phi'')` in `rho`, for `rho` in `[0, rho_+)`.
pub fn phi_derivs(rho: f64, alpha: f64, beta: f64) -> Result<(f64, f64)> {
    let k = check_phi_domain(rho, alpha, beta, false)?;
    let c = k.c;
    let (na, nb) = (1.0 - alpha, 1.0 - beta);
    let l1 = na * beta - c * rho;
    let l2 = alpha * nb - c * rho;
    let l3 = na * nb + c * rho;
    let l4 = alpha * beta + c * rho;
    let d1 = 0.5 * ((1.0 + rho) / (1.0 - rho)).log2() + c * ((l1 * l2) / (l4 * l3)).log2();
    let d2 = c * c / LN_2
        * (1.0 / (c * c * (1.0 - rho * rho)) - 1.0 / l1 - 1.0 / l2 - 1.0 / l3 - 1.0 / l4);
    Ok((d1, d2))
}

// ----------------------------------------------------------------------
// numerator polynomial of phi''

/// Coefficients of a real polynomial, lowest degree first.
type Poly = Vec<f64>;

fn poly_mul(a: &[f64], b: &[f64]) -> Poly {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(a: &[f64], b: &[f64]) -> Poly {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, o) in out.iter_mut().enumerate() {
        *o = a.get(i).copied().unwrap_or(0.0) + b.get(i).copied().unwrap_or(0.0);
    }
    out
}

fn product(factors: &[&[f64]]) -> Poly {
    factors.iter().fold(vec![1.0], |acc, f| poly_mul(&acc, f))
}

/// The four linear factors of `q` (besides `1 - rho^2`), as polynomials in `rho`.
fn linear_factors(alpha: f64, beta: f64, c: f64) -> [[f64; 2]; 4] {
    let (na, nb) = (1.0 - alpha, 1.0 - beta);
    [
        [na * beta, -c],
        [alpha * nb, -c],
        [na * nb, c],
        [alpha * beta, c],
    ]
}

/// Full degree-5 expansion of the numerator `p(rho)` of `phi''`,
/// `p = L1 L2 L3 L4 - C^2 (1 - rho^2) (L2 L3 L4 + L1 L3 L4 + L1 L2 L4 + L1 L2 L3)`.
pub fn expand_p(alpha: f64, beta: f64) -> Result<[f64; 6]> {
    check_pair(alpha, beta)?;
    let c = schwarz_constant(alpha, beta);
    let [l1, l2, l3, l4] = linear_factors(alpha, beta, c);
    let all = product(&[&l1, &l2, &l3, &l4]);
    let triples = [
        product(&[&l2, &l3, &l4]),
        product(&[&l1, &l3, &l4]),
        product(&[&l1, &l2, &l4]),
        product(&[&l1, &l2, &l3]),
    ];
    let sum = triples.iter().fold(vec![0.0], |acc, t| poly_add(&acc, t));
    let weight = [-c * c, 0.0, c * c];
    let neg = poly_mul(&weight, &sum);
    let p = poly_add(&all, &neg);
    let mut out = [0.0; 6];
    out[..p.len()].copy_from_slice(&p);
    Ok(out)
}

/// `p(rho)` evaluated directly from its product form (no expansion).
pub fn p_direct(rho: f64, alpha: f64, beta: f64) -> Result<f64> {
    check_pair(alpha, beta)?;
    let c = schwarz_constant(alpha, beta);
    let l = linear_factors(alpha, beta, c).map(|[k, s]| k + s * rho);
    let triple_sum =
        l[1] * l[2] * l[3] + l[0] * l[2] * l[3] + l[0] * l[1] * l[3] + l[0] * l[1] * l[2];
    Ok(l[0] * l[1] * l[2] * l[3] - c * c * (1.0 - rho * rho) * triple_sum)
}

/// `q(rho) = ln 2 (1 - rho^2) L1 L2 L3 L4`, so that `phi'' = p / q`.
pub fn q_direct(rho: f64, alpha: f64, beta: f64) -> Result<f64> {
    check_pair(alpha, beta)?;
    let c = schwarz_constant(alpha, beta);
    let l = linear_factors(alpha, beta, c).map(|[k, s]| k + s * rho);
    Ok(LN_2 * (1.0 - rho * rho) * l.iter().product::<f64>())
}

/// A real cubic `c0 + c1 rho + c2 rho^2 + c3 rho^3`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CubicPoly {
    pub coeffs: [f64; 4],
}

impl CubicPoly {
    pub fn eval(&self, rho: f64) -> f64 {
        let [c0, c1, c2, c3] = self.coeffs;
        ((c3 * rho + c2) * rho + c1) * rho + c0
    }

    /// `max |c_i|`.
    pub fn scale(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// The numerator `p` of `phi''` after its degree collapse to a cubic.
///
/// Fails with `DegreeCollapseViolation` if the expanded degree-4 or degree-5
/// coefficient exceeds `DEGREE_COLLAPSE * scale`.
pub fn p_cubic(alpha: f64, beta: f64) -> Result<CubicPoly> {
    let full = expand_p(alpha, beta)?;
    let cubic = CubicPoly {
        coeffs: [full[0], full[1], full[2], full[3]],
    };
    let scale = cubic.scale();
    if full[4].abs() > DEGREE_COLLAPSE * scale || full[5].abs() > DEGREE_COLLAPSE * scale {
        return Err(Error::DegreeCollapseViolation {
            c4: full[4].abs(),
            c5: full[5].abs(),
            scale,
        });
    }
    Ok(cubic)
}

/// Closed form `p(0) = alpha(1-alpha)beta(1-beta)(alpha(1-alpha)beta(1-beta) - C^2)`.
pub fn p_at_zero_closed_form(alpha: f64, beta: f64) -> f64 {
    let g2 = alpha * (1.0 - alpha) * beta * (1.0 - beta);
    let c = schwarz_constant(alpha, beta);
    g2 * (g2 - c * c)
}

/// Closed form `p(rho_+) = -(C^2 - (alpha(1-beta))^2)(beta - alpha)(1-beta) alpha`.
pub fn p_at_rho_plus_closed_form(alpha: f64, beta: f64) -> f64 {
    let c = schwarz_constant(alpha, beta);
    let anb = alpha * (1.0 - beta);
    -(c * c - anb * anb) * (beta - alpha) * (1.0 - beta) * alpha
}

/// Which negative point witnesses a nonpositive value of `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativeBranch {
    /// `rho_o <= 1`: `p(-rho_o) <= 0`.
    CircAtMostOne,
    /// `rho_o > 1`: `p(-rho_-) <= 0`.
    CircAboveOne,
}

/// The probe point `-rho_o` or `-rho_-` and the branch it came from.
pub fn negative_probe(k: &LemmaConstants) -> (f64, NegativeBranch) {
    if k.rho_circ <= 1.0 {
        (-k.rho_circ, NegativeBranch::CircAtMostOne)
    } else {
        (-k.rho_minus, NegativeBranch::CircAboveOne)
    }
}

/// Outcome of isolating the unique positive root of `p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RootCertificate {
    pub rho_star: f64,
    pub bracket: (f64, f64),
    pub residual: f64,
    pub sign_changes: usize,
    pub negative_probe: f64,
    pub p_at_probe: f64,
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Locates the unique sign change of `p` in `(0, rho_plus)` by bisection.
///
/// Preconditions checked numerically: `p(0) > 0`, `p(rho_plus) < 0`, and
/// `p(negative_probe) <= 0` with `negative_probe <= 0` (a root on the negative
/// axis). Uniqueness is asserted by a scan of `ROOT_SCAN_POINTS` points.
pub fn isolate_root(p: &CubicPoly, rho_plus: f64, negative_probe: f64) -> Result<RootCertificate> {
    let scale = p.scale();
    let (at_zero, at_end) = (p.eval(0.0), p.eval(rho_plus));
    if at_zero.is_nan() || at_zero <= 0.0 {
        return Err(Error::SignPatternViolation(format!(
            "p(0) = {at_zero:e} is not positive"
        )));
    }
    if at_end.is_nan() || at_end >= 0.0 {
        return Err(Error::SignPatternViolation(format!(
            "p(rho_+) = {at_end:e} is not negative"
        )));
    }
    let p_at_probe = p.eval(negative_probe);
    if negative_probe > 0.0 || p_at_probe > 1e-12 * scale {
        return Err(Error::SignPatternViolation(format!(
            "no nonpositive value at the negative probe {negative_probe}: p = {p_at_probe:e}"
        )));
    }

    let mut changes = 0;
    let mut last = 1i8;
    for k in 1..=ROOT_SCAN_POINTS + 1 {
        let s = sign(p.eval(rho_plus * k as f64 / (ROOT_SCAN_POINTS + 1) as f64));
        if s != 0 && s != last {
            changes += 1;
            last = s;
        }
    }
    if changes != 1 {
        return Err(Error::SignPatternViolation(format!(
            "{changes} sign changes of p on (0, rho_+)"
        )));
    }

    let (mut lo, mut hi) = (0.0, rho_plus);
    while hi - lo > ROOT_INTERVAL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if p.eval(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let rho_star = 0.5 * (lo + hi);
    Ok(RootCertificate {
        rho_star,
        bracket: (lo, hi),
        residual: p.eval(rho_star).abs(),
        sign_changes: changes,
        negative_probe,
        p_at_probe,
    })
}

/// Per-`(alpha, beta)` certificate for the sign structure of `phi''`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CubicCertificate {
    pub constants: LemmaConstants,
    pub cubic: CubicPoly,
    /// `max(|c4|, |c5|) / scale` of the full expansion.
    pub collapse_ratio: f64,
    pub p_zero: f64,
    pub p_rho_plus: f64,
    /// `alpha(1-alpha)beta(1-beta) - C^2`, which must be positive for `p(0) > 0`.
    pub p0_margin: f64,
    pub branch: NegativeBranch,
    pub root: RootCertificate,
}

/// Runs the cubic checks at one `(alpha, beta)` with `alpha < beta`.
pub fn cubic_certificate(alpha: f64, beta: f64) -> Result<CubicCertificate> {
    if alpha.is_nan() || beta.is_nan() || alpha >= beta {
        return Err(Error::Domain(format!(
            "certificate needs alpha < beta, got ({alpha}, {beta})"
        )));
    }
    let k = LemmaConstants::new(alpha, beta)?;
    let full = expand_p(alpha, beta)?;
    let cubic = p_cubic(alpha, beta)?;
    let scale = cubic.scale();
    let p_zero = cubic.eval(0.0);
    let p_rho_plus = cubic.eval(k.rho_plus);
    for (label, got, want) in [
        ("p(0)", p_zero, p_at_zero_closed_form(alpha, beta)),
        (
            "p(rho_+)",
            p_rho_plus,
            p_at_rho_plus_closed_form(alpha, beta),
        ),
    ] {
        if (got - want).abs() > 1e-9 * scale {
            return Err(Error::SignPatternViolation(format!(
                "{label} = {got:e} disagrees with its closed form {want:e}"
            )));
        }
    }
    let p0_margin = alpha * (1.0 - alpha) * beta * (1.0 - beta) - k.c * k.c;
    if p0_margin.is_nan() || p0_margin <= 0.0 {
        return Err(Error::SignPatternViolation(format!(
            "alpha(1-alpha)beta(1-beta) - C^2 = {p0_margin:e} is not positive"
        )));
    }
    let (probe, branch) = negative_probe(&k);
    let root = isolate_root(&cubic, k.rho_plus, probe)?;
    if root.residual > 1e-9 * scale {
        return Err(Error::SignPatternViolation(format!(
            "root residual {:e} exceeds 1e-9 * scale",
            root.residual
        )));
    }
    Ok(CubicCertificate {
        constants: k,
        cubic,
        collapse_ratio: full[4].abs().max(full[5].abs()) / scale,
        p_zero,
        p_rho_plus,
        p0_margin,
        branch,
        root,
    })
}

// ----------------------------------------------------------------------
// change of variables and the boundary function psi

/// `(alpha, beta) -> (c, x)` with `c = ln(alpha/beta) / ln(alpha(1-beta)/((1-alpha)beta))`
/// and `x = sqrt(alpha(1-beta)/((1-alpha)beta))`. Maps `0 < alpha < beta < 1` onto `(0,1)^2`.
pub fn transform_to_cx(alpha: f64, beta: f64) -> Result<(f64, f64)> {
    check_pair(alpha, beta)?;
    if alpha == beta {
        return Err(Error::Domain("transformation needs alpha < beta".into()));
    }
    let log_ratio = alpha.ln() - beta.ln();
    let log_odds = log_ratio + (-beta).ln_1p() - (-alpha).ln_1p();
    Ok((log_ratio / log_odds, (0.5 * log_odds).exp()))
}

/// Inverse map: `alpha = (x^(2c) - x^2)/(1 - x^2)`, `beta = (1 - x^(2-2c))/(1 - x^2)`.
pub fn transform_to_ab(c: f64, x: f64) -> Result<(f64, f64)> {
    check_open_unit("c", c)?;
    check_open_unit("x", x)?;
    let (alpha, beta, _) = ab_from_log(c, x.ln());
    Ok((alpha, beta))
}

/// `(alpha, beta, x^(2c))` from `c` and `ln x`, via `expm1` to keep `x -> 1` accurate.
fn ab_from_log(c: f64, log_x: f64) -> (f64, f64, f64) {
    let beta = ((2.0 - 2.0 * c) * log_x).exp_m1() / (2.0 * log_x).exp_m1();
    let y = (2.0 * c * log_x).exp();
    (y * beta, beta, y)
}

/// `phi(rho_+, alpha, beta)` in the `(c, x)` coordinates:
/// `1 - h((1+3x)/(2+2x)) - h(alpha) + beta h(x^(2c))`.
pub fn psi(c: f64, x: f64) -> Result<f64> {
    check_open_unit("c", c)?;
    check_open_unit("x", x)?;
    let (alpha, beta, y) = ab_from_log(c, x.ln());
    Ok(1.0 - h((1.0 + 3.0 * x) / (2.0 + 2.0 * x)) - h(alpha) + beta * h(y))
}

/// The expanded form
/// `1 - h((1+3x)/(2+2x)) + h(x^2)/(1-x^2) + (x^(2c) h(x^(2-2c)) + x^(2-2c) h(x^(2c)))/(x^2-1)`.
///
/// Loses accuracy as `x -> 1`; [`psi`] is the robust evaluation.
pub fn psi_expanded(c: f64, x: f64) -> Result<f64> {
    check_open_unit("c", c)?;
    check_open_unit("x", x)?;
    let x2 = x * x;
    let (y, z) = (x.powf(2.0 * c), x.powf(2.0 - 2.0 * c));
    Ok(1.0 - h((1.0 + 3.0 * x) / (2.0 + 2.0 * x))
        + h(x2) / (1.0 - x2)
        + (y * h(z) + z * h(y)) / (x2 - 1.0))
}

/// `d psi / dc`.
pub fn psi_first_deriv(c: f64, x: f64) -> Result<f64> {
    check_open_unit("c", c)?;
    check_open_unit("x", x)?;
    let l = x.ln();
    let y = (2.0 * c * l).exp();
    let ln_one_minus_y = (-(2.0 * c * l).exp_m1()).ln();
    // ln(x^(2c) - x^2) = 2c ln x + ln(1 - x^(2-2c))
    let ln_gap = 2.0 * c * l + (-((2.0 - 2.0 * c) * l).exp_m1()).ln();
    let bracket = 2.0 * y * c * l + ((2.0 - 2.0 * c) * l).exp() * ln_one_minus_y - y * ln_gap;
    Ok(2.0 * l / ((x * x - 1.0) * LN_2) * bracket)
}

/// `1/(t^-1 - 1) + ln(1 - t)`, positive on `(0, 1)`.
pub fn lemma2_term(t: f64) -> Result<f64> {
    check_open_unit("t", t)?;
    Ok(lemma2_from_log(t.ln()))
}

/// The same quantity from `ln t`, with a series for small `t`.
fn lemma2_from_log(log_t: f64) -> f64 {
    let t = log_t.exp();
    if t < 1e-2 {
        // sum_{k>=2} (1 - 1/k) t^k
        let mut acc = 0.0;
        for k in (2..=14).rev() {
            acc = acc * t + (1.0 - 1.0 / k as f64);
        }
        acc * t * t
    } else {
        let one_minus = -log_t.exp_m1();
        t / one_minus + one_minus.ln()
    }
}

/// `d^2 psi / dc^2`; positive on `(0,1)^2`.
pub fn psi_second_deriv(c: f64, x: f64) -> Result<f64> {
    check_open_unit("c", c)?;
    check_open_unit("x", x)?;
    let l = x.ln();
    let y = (2.0 * c * l).exp();
    let bracket = lemma2_from_log((2.0 - 2.0 * c) * l)
        + ((2.0 - 4.0 * c) * l).exp() * lemma2_from_log(2.0 * c * l);
    Ok(4.0 * l * l * y / ((1.0 - x * x) * LN_2) * bracket)
}

fn check_gamma_domain(x: f64) -> Result<()> {
    if x.is_finite() && (0.0..1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain(format!("x = {x} outside [0, 1)")))
    }
}

/// `gamma(x) = psi(1/2, x) = 1 - h((1+3x)/(2+2x)) - h(x/(1+x)) + h(x)/(1+x)`.
pub fn gamma_fn(x: f64) -> Result<f64> {
    check_gamma_domain(x)?;
    Ok(1.0 - h((1.0 + 3.0 * x) / (2.0 + 2.0 * x)) - h(x / (1.0 + x)) + h(x) / (1.0 + x))
}

/// `gamma'(x) = log2((1+3x)(1-x)) / (1+x)^2`.
pub fn gamma_prime(x: f64) -> Result<f64> {
    check_gamma_domain(x)?;
    Ok(((1.0 + 3.0 * x) * (1.0 - x)).log2() / ((1.0 + x) * (1.0 + x)))
}

// ----------------------------------------------------------------------
// equal-bias derivatives

/// `(d phi/d rho, d^2 phi/d rho^2)` at `alpha = beta = a`, for `a` in `(1/2, 1)`
/// and `rho` in `(0, 1)`.
pub fn uniqueness_derivs(rho: f64, a: f64) -> Result<(f64, f64)> {
    if !(a > 0.5 && a < 1.0) {
        return Err(Error::Domain(format!("a = {a} outside (1/2, 1)")));
    }
    check_open_unit("rho", rho)?;
    let na = 1.0 - a;
    let nr = 1.0 - rho;
    let d1 = 0.5 * ((1.0 + rho) / nr).log2() - a * na * (rho / (a * na * nr * nr) + 1.0).log2();
    let d2 = rho * (1.0 - 2.0 * a).powi(2)
        / (LN_2 * (a + rho * na) * (1.0 - a * nr) * (1.0 - rho * rho));
    Ok((d1, d2))
}

// ----------------------------------------------------------------------
// grid verification

/// Resolution of the `(alpha, beta, rho)` grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GridSpec {
    pub alpha: usize,
    pub beta: usize,
    pub rho: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            alpha: 50,
            beta: 50,
            rho: 20,
        }
    }
}

impl std::str::FromStr for GridSpec {
    type Err = Error;

    /// Parses `AxBxR`, e.g. `50x50x20`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(['x', 'X', '×']).collect();
        let bad = || Error::Parse {
            position: 0,
            message: format!("expected AxBxR with integers >= 2, got `{s}`"),
        };
        if parts.len() != 3 {
            return Err(bad());
        }
        let v: Vec<usize> = parts
            .iter()
            .map(|p| p.trim().parse::<usize>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let spec = Self {
            alpha: v[0],
            beta: v[1],
            rho: v[2],
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.alpha < 2 || self.beta < 2 || self.rho < 2 {
            return Err(Error::Domain(format!(
                "grid resolution must be at least 2 per axis, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Interior `(alpha, beta)` points with `alpha < beta`, in row-major order.
    pub fn cells(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for i in 1..=self.alpha {
            let alpha = i as f64 / (self.alpha + 1) as f64;
            for j in 1..=self.beta {
                let beta = j as f64 / (self.beta + 1) as f64;
                if alpha < beta {
                    out.push((alpha, beta));
                }
            }
        }
        out
    }

    /// `rho_k = k/R * rho_+` for `k = 1..=R`.
    pub fn rhos(&self, rho_plus: f64) -> impl Iterator<Item = f64> + '_ {
        (1..=self.rho).map(move |k| rho_plus * k as f64 / self.rho as f64)
    }
}

/// Smallest `rho` used for the near-equality probe.
pub const NEAR_ZERO_RHO: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchCounts {
    pub circ_at_most_one: usize,
    pub circ_above_one: usize,
}

/// Result of certifying `phi >= 0` on a grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lemma1Report {
    pub schema: u32,
    pub grid: GridSpec,
    pub cells: usize,
    pub points: usize,
    pub min_phi: f64,
    /// `[rho, alpha, beta]` of the minimum.
    pub argmin: [f64; 3],
    /// Points with `phi < -tolerance`.
    pub violations: usize,
    /// Points with `phi <= 0`.
    pub nonpositive: usize,
    pub certificates_failed: usize,
    pub failures: Vec<String>,
    /// Largest `phi(NEAR_ZERO_RHO, alpha, beta)` over cells.
    pub near_zero_max_phi: f64,
    pub min_p0_margin: f64,
    pub max_collapse_ratio: f64,
    pub branches: BranchCounts,
    pub tolerance: f64,
}

impl Lemma1Report {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.nonpositive == 0 && self.certificates_failed == 0
    }
}

struct CellOutcome {
    min_phi: f64,
    argmin: [f64; 3],
    violations: usize,
    nonpositive: usize,
    near_zero: f64,
    certificate: std::result::Result<CubicCertificate, String>,
}

fn evaluate_cell(grid: &GridSpec, alpha: f64, beta: f64, tolerance: f64) -> CellOutcome {
    let mut out = CellOutcome {
        min_phi: f64::INFINITY,
        argmin: [f64::NAN; 3],
        violations: 0,
        nonpositive: 0,
        near_zero: f64::NAN,
        certificate: cubic_certificate(alpha, beta).map_err(|e| format!("({alpha}, {beta}): {e}")),
    };
    let k = match LemmaConstants::new(alpha, beta) {
        Ok(k) => k,
        Err(e) => {
            out.certificate = Err(e.to_string());
            return out;
        }
    };
    for rho in grid.rhos(k.rho_plus) {
        let value = match phi(rho, alpha, beta) {
            Ok(v) => v,
            Err(e) => {
                out.certificate = Err(e.to_string());
                continue;
            }
        };
        if value < out.min_phi {
            out.min_phi = value;
            out.argmin = [rho, alpha, beta];
        }
        if value < -tolerance {
            out.violations += 1;
        }
        if value <= 0.0 {
            out.nonpositive += 1;
        }
    }
    out.near_zero = phi(NEAR_ZERO_RHO.min(k.rho_plus), alpha, beta).unwrap_or(f64::NAN);
    out
}

/// Evaluates `phi` on the grid and runs [`cubic_certificate`] at every cell.
///
/// Cells are processed in parallel on the current rayon pool and merged in
/// cell order, so the report does not depend on the worker count.
pub fn verify_lemma1(grid: &GridSpec, tolerance: f64) -> Result<Lemma1Report> {
    grid.validate()?;
    let cells = grid.cells();
    let outcomes: Vec<CellOutcome> = cells
        .par_iter()
        .map(|&(alpha, beta)| evaluate_cell(grid, alpha, beta, tolerance))
        .collect();

    let mut report = Lemma1Report {
        schema: 1,
        grid: *grid,
        cells: cells.len(),
        points: cells.len() * grid.rho,
        min_phi: f64::INFINITY,
        argmin: [f64::NAN; 3],
        violations: 0,
        nonpositive: 0,
        certificates_failed: 0,
        failures: Vec::new(),
        near_zero_max_phi: f64::NEG_INFINITY,
        min_p0_margin: f64::INFINITY,
        max_collapse_ratio: 0.0,
        branches: BranchCounts {
            circ_at_most_one: 0,
            circ_above_one: 0,
        },
        tolerance,
    };
    for o in outcomes {
        if o.min_phi < report.min_phi {
            report.min_phi = o.min_phi;
            report.argmin = o.argmin;
        }
        report.violations += o.violations;
        report.nonpositive += o.nonpositive;
        report.near_zero_max_phi = report.near_zero_max_phi.max(o.near_zero);
        match o.certificate {
            Ok(cert) => {
                report.min_p0_margin = report.min_p0_margin.min(cert.p0_margin);
                report.max_collapse_ratio = report.max_collapse_ratio.max(cert.collapse_ratio);
                match cert.branch {
                    NegativeBranch::CircAtMostOne => report.branches.circ_at_most_one += 1,
                    NegativeBranch::CircAboveOne => report.branches.circ_above_one += 1,
                }
            }
            Err(msg) => {
                report.certificates_failed += 1;
                if report.failures.len() < 16 {
                    report.failures.push(msg);
                }
            }
        }
    }
    Ok(report)
}

/// Default violation threshold for [`verify_lemma1`].
pub const LEMMA1_TOLERANCE: f64 = ENTROPIC;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypercube::{dictator, wht, BooleanFunction};
    use crate::information::xi;
    use crate::source::theta_rho;
    use crate::tolerance::{relative_error, FD_RELATIVE, FD_STEP};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_function(rng: &mut impl Rng, n: usize) -> BooleanFunction {
        BooleanFunction::from_fn(n, |_| rng.random()).unwrap()
    }

    fn central(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        (f(x + FD_STEP) - f(x - FD_STEP)) / (2.0 * FD_STEP)
    }

    #[test]
    fn tau_split_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let f = wht(&random_function(&mut rng, 4));
            let t = tau_split(&f, &f).unwrap();
            assert_eq!(t.numerators().1, 0);
            assert!((t.tau_plus() - (1.0 - f.coeff(0).powi(2)) / 4.0).abs() < 1e-15);
        }
        let d = dictator(2, 1).unwrap();
        let t = tau_split(&wht(&d), &wht(&d.negated())).unwrap();
        assert_eq!((t.tau_plus(), t.tau_minus()), (0.0, -0.25));
    }

    #[test]
    fn tau_split_bounds_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..2000 {
            let n = rng.random_range(1..=5);
            let f = wht(&random_function(&mut rng, n));
            let g = wht(&random_function(&mut rng, n));
            let t = tau_split(&f, &g).unwrap();
            assert!(t.schwarz_holds());
            let (a, b) = (f.bias(), g.bias());
            let root = (a * (1.0 - a) * b * (1.0 - b)).sqrt();
            assert!(t.tau_plus() - t.tau_minus() <= root + 1e-12);
            assert!(t.tau_plus() <= (a * (1.0 - b) + root) / 2.0 + 1e-12);
            assert!(t.tau_minus() >= -((1.0 - a) * (1.0 - b) + root) / 2.0 - 1e-12);
            assert!((t.theta_one() - theta_rho(&f, &g, 1.0).unwrap()).abs() < 1e-15);
            let rho: f64 = rng.random_range(0.0..=1.0);
            let theta = theta_rho(&f, &g, rho).unwrap();
            assert!(rho * t.tau_minus() - 1e-15 <= theta && theta <= rho * t.tau_plus() + 1e-15);
        }
    }

    #[test]
    fn schwarz_is_tight_for_dictators() {
        let d = wht(&dictator(3, 2).unwrap());
        let t = tau_split(&d, &d).unwrap();
        assert!(t.schwarz_holds());
        assert_eq!(t.tau_plus() - t.tau_minus(), 0.25);
    }

    #[test]
    fn theta_interval_examples() {
        assert_eq!(theta_interval(0.0, 0.6, 0.8).unwrap(), (0.0, 0.0));
        let (lo, hi) = theta_interval(0.5, 0.5, 0.5).unwrap();
        assert_eq!((lo, hi), (-0.125, 0.125));
        assert!(theta_interval(0.5, 0.4, 0.6).is_err());
        assert!(theta_interval(0.5, 0.7, 0.6).is_err());
        assert!(theta_interval(1.2, 0.5, 0.6).is_err());
        assert_eq!(schwarz_constant(0.5, 0.5), 0.25);
    }

    #[test]
    fn theta_interval_contains_theta() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut checked = 0;
        while checked < 10_000 {
            let n = rng.random_range(1..=4);
            let f = wht(&random_function(&mut rng, n));
            let g = wht(&random_function(&mut rng, n));
            let (f, g) = normalize_pair(&f, &g).unwrap();
            let (a, b) = (f.bias(), g.bias());
            if b >= 1.0 {
                continue;
            }
            let rho: f64 = rng.random_range(0.0..=1.0);
            let theta = theta_rho(&f, &g, rho).unwrap();
            let bs = BoundSet::new(rho, a, b).unwrap();
            assert!(bs.theta_lo <= 0.0 && 0.0 <= bs.theta_hi);
            assert!(bs.theta_lo - 1e-12 <= theta && theta <= bs.theta_hi + 1e-12);
            assert!(bs.theta_hi <= a * (1.0 - b) && bs.theta_lo >= -(1.0 - a) * (1.0 - b));

            // endpoint reduction by convexity of xi
            let mi = xi(theta, a, b).unwrap();
            let ends = xi(bs.theta_hi, a, b)
                .unwrap()
                .max(xi(bs.theta_lo, a, b).unwrap());
            assert!(mi <= ends + 1e-12);

            // monotonicity link to phi at the capped correlations
            let budget = 1.0 - h((rho + 1.0) / 2.0);
            let upper = phi(bs.rho_plus_point, a, b).unwrap();
            assert!(upper <= budget - xi(bs.theta_hi, a, b).unwrap() + 1e-12);
            let lower = phi(bs.rho_minus_point, 1.0 - a, b).unwrap();
            assert!(lower <= budget - xi(bs.theta_lo, a, b).unwrap() + 1e-12);
            checked += 1;
        }
    }

    #[test]
    fn phi_examples() {
        for (a, b) in [(0.1, 0.2), (0.3, 0.6), (0.45, 0.9)] {
            assert!(phi(0.0, a, b).unwrap().abs() < 1e-15);
            assert!(phi_derivs(0.0, a, b).unwrap().0.abs() < 1e-15);
        }
        let k = LemmaConstants::new(0.6, 0.7).unwrap();
        assert!((k.rho_plus - 0.889_988_864_128_729_7).abs() < 1e-15);
        // 40-digit reference
        let v = phi(k.rho_plus, 0.6, 0.7).unwrap();
        assert!((v - 0.135_929_146_935_965_8).abs() < 1e-14, "{v}");
        assert!((phi(0.3, 0.4, 0.8).unwrap() - 0.031_151_052_654_845_05).abs() < 1e-14);
        assert!(phi(0.95, 0.6, 0.7).is_err());
        assert!(phi(0.1, 0.7, 0.6).is_err());
        assert!(phi(-0.1, 0.3, 0.6).is_err());
        assert!(phi_derivs(k.rho_plus, 0.6, 0.7).is_err());
    }

    #[test]
    fn phi_second_derivative_positive_at_zero() {
        for i in 1..20 {
            for j in (i + 1)..20 {
                let (a, b) = (i as f64 / 20.0, j as f64 / 20.0);
                let (_, d2) = phi_derivs(0.0, a, b).unwrap();
                let pq = p_direct(0.0, a, b).unwrap() / q_direct(0.0, a, b).unwrap();
                assert!(d2 > 0.0);
                assert!(relative_error(d2, pq) < 1e-12);
            }
        }
    }

    #[test]
    fn phi_derivs_match_finite_differences() {
        let (rho, a, b) = (0.3, 0.4, 0.8);
        let (d1, d2) = phi_derivs(rho, a, b).unwrap();
        let fd1 = central(|r| phi(r, a, b).unwrap(), rho);
        let fd2 = central(|r| phi_derivs(r, a, b).unwrap().0, rho);
        assert!(relative_error(d1, fd1) < FD_RELATIVE);
        assert!(relative_error(d2, fd2) < FD_RELATIVE);
        // direct second difference of phi, limited by cancellation to ~1e-5
        let h2 = 1e-4;
        let fd2_direct = (phi(rho + h2, a, b).unwrap() - 2.0 * phi(rho, a, b).unwrap()
            + phi(rho - h2, a, b).unwrap())
            / (h2 * h2);
        assert!((d2 - fd2_direct).abs() < 1e-5);
    }

    #[test]
    fn p_expansion_matches_interpolation() {
        let (a, b) = (0.3, 0.6);
        let full = expand_p(a, b).unwrap();
        let cubic = p_cubic(a, b).unwrap();
        // Newton divided differences through rho = 0, 1, 2, 3 of the product form
        let ys: Vec<f64> = (0..4).map(|r| p_direct(r as f64, a, b).unwrap()).collect();
        let d1: Vec<f64> = ys.windows(2).map(|w| w[1] - w[0]).collect();
        let d2: Vec<f64> = d1.windows(2).map(|w| (w[1] - w[0]) / 2.0).collect();
        let d3 = (d2[1] - d2[0]) / 3.0;
        // expand y0 + d1 r + d2 r(r-1) + d3 r(r-1)(r-2)
        let interp = [ys[0], d1[0] - d2[0] + 2.0 * d3, d2[0] - 3.0 * d3, d3];
        for (c, i) in cubic.coeffs.iter().zip(interp) {
            assert!((c - i).abs() < 1e-10, "{c} vs {i}");
        }
        let scale = cubic.scale();
        assert!(full[4].abs() <= 1e-10 * scale && full[5].abs() <= 1e-10 * scale);
        assert!((cubic.eval(0.0) - p_at_zero_closed_form(a, b)).abs() < 1e-15);
        let k = LemmaConstants::new(a, b).unwrap();
        assert!((cubic.eval(k.rho_plus) - p_at_rho_plus_closed_form(a, b)).abs() < 1e-15);
        assert!(cubic.eval(0.0) > 0.0 && cubic.eval(k.rho_plus) < 0.0);
    }

    #[test]
    fn p_over_q_is_phi_second_derivative() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let a: f64 = rng.random_range(0.01..0.98);
            let b: f64 = rng.random_range(a + 0.005..0.995);
            let k = LemmaConstants::new(a, b).unwrap();
            let rho = rng.random_range(0.0..0.99) * k.rho_plus;
            let cubic = p_cubic(a, b).unwrap();
            let ratio = cubic.eval(rho) / q_direct(rho, a, b).unwrap();
            let (_, d2) = phi_derivs(rho, a, b).unwrap();
            assert!(relative_error(ratio, d2) < 1e-8, "{ratio} vs {d2}");
        }
    }

    #[test]
    fn root_sign_pattern() {
        let (a, b) = (0.3, 0.6);
        let cert = cubic_certificate(a, b).unwrap();
        let star = cert.root.rho_star;
        let rho_plus = cert.constants.rho_plus;
        assert!(0.0 < star && star < rho_plus);
        assert!(cert.root.bracket.1 - cert.root.bracket.0 <= ROOT_INTERVAL);
        for k in 1..200 {
            let rho = rho_plus * k as f64 / 200.0;
            if (rho - star).abs() < 1e-6 {
                continue;
            }
            let (_, d2) = phi_derivs(rho, a, b).unwrap();
            if rho < star {
                assert!(d2 > 0.0, "phi'' at {rho} = {d2}");
            } else {
                assert!(d2 < 0.0, "phi'' at {rho} = {d2}");
            }
        }
    }

    #[test]
    fn negative_root_witness_on_grid() {
        let mut seen = [false; 2];
        for (a, b) in (GridSpec {
            alpha: 30,
            beta: 30,
            rho: 2,
        })
        .cells()
        {
            let k = LemmaConstants::new(a, b).unwrap();
            let cubic = p_cubic(a, b).unwrap();
            let tol = 1e-12 * cubic.scale();
            if k.rho_circ <= 1.0 {
                assert!(cubic.eval(-k.rho_circ) <= tol);
                seen[0] = true;
            } else {
                assert!(cubic.eval(-k.rho_minus) <= tol);
                seen[1] = true;
            }
        }
        assert_eq!(seen, [true, true]);
    }

    #[test]
    fn root_residuals_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let a: f64 = rng.random_range(0.01..0.98);
            let b: f64 = rng.random_range(a + 0.005..0.995);
            let cert = cubic_certificate(a, b).unwrap();
            assert!(cert.root.residual <= 1e-9 * cert.cubic.scale());
            assert_eq!(cert.root.sign_changes, 1);
        }
    }

    #[test]
    fn isolate_root_rejects_bad_signs() {
        let p = CubicPoly {
            coeffs: [-1.0, 0.0, 0.0, 1.0],
        };
        assert!(matches!(
            isolate_root(&p, 0.5, -1.0),
            Err(Error::SignPatternViolation(_))
        ));
        // three positive roots at 0.1, 0.2, 0.3: p(0) > 0 and p(0.4) < 0
        let q = CubicPoly {
            coeffs: [0.006, -0.11, 0.6, -1.0],
        };
        assert!(q.eval(0.0) > 0.0 && q.eval(0.4) < 0.0);
        assert!(matches!(
            isolate_root(&q, 0.4, -1.0),
            Err(Error::SignPatternViolation(_))
        ));
    }

    #[test]
    fn transform_examples() {
        let (c, x) = transform_to_cx(0.25, 0.75).unwrap();
        let (a, b) = transform_to_ab(c, x).unwrap();
        assert!((a - 0.25).abs() < 1e-10 && (b - 0.75).abs() < 1e-10);
        // leading behavior alpha ~ x^(2c) as x -> 0
        let (a, _) = transform_to_ab(0.3, 1e-6).unwrap();
        assert!((a / 1e-6f64.powf(0.6) - 1.0).abs() < 1e-6);
        let (a, b) = transform_to_ab(0.5, 0.4).unwrap();
        assert!((a * (1.0 - b) / ((1.0 - a) * b) - 0.16).abs() < 1e-14);
        assert!(transform_to_cx(0.5, 0.5).is_err());
        assert!(transform_to_ab(1.0, 0.5).is_err());
    }

    #[test]
    fn psi_matches_phi_at_rho_plus() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..1000 {
            let c: f64 = rng.random_range(0.001..0.999);
            let x: f64 = rng.random_range(0.001..0.999);
            let (a, b) = transform_to_ab(c, x).unwrap();
            if !(a > 0.0 && a < b && b < 1.0) {
                continue;
            }
            let k = LemmaConstants::new(a, b).unwrap();
            let via_phi = phi(k.rho_plus, a, b).unwrap();
            assert!((psi(c, x).unwrap() - via_phi).abs() < 1e-9);
        }
        for (c, x) in [(0.2, 0.3), (0.5, 0.5), (0.9, 0.8)] {
            assert!((psi(c, x).unwrap() - psi_expanded(c, x).unwrap()).abs() < 1e-13);
        }
    }

    #[test]
    fn psi_derivatives() {
        for i in 1..=100 {
            for j in 1..=100 {
                let (c, x) = (i as f64 / 101.0, j as f64 / 101.0);
                assert!(psi_second_deriv(c, x).unwrap() > 0.0, "({c}, {x})");
            }
        }
        for j in 1..100 {
            let x = j as f64 / 100.0;
            assert!(psi_first_deriv(0.5, x).unwrap().abs() < 1e-9);
        }
        for (c, x) in [(0.3, 0.4), (0.8, 0.9), (0.1, 0.05)] {
            let fd1 = central(|t| psi(t, x).unwrap(), c);
            let fd2 = central(|t| psi_first_deriv(t, x).unwrap(), c);
            assert!(relative_error(psi_first_deriv(c, x).unwrap(), fd1) < FD_RELATIVE);
            assert!(relative_error(psi_second_deriv(c, x).unwrap(), fd2) < FD_RELATIVE);
        }
    }

    #[test]
    fn gamma_examples() {
        assert!(gamma_prime(2.0 / 3.0).unwrap().abs() < 1e-15);
        let g = gamma_fn(2.0 / 3.0).unwrap();
        assert!((g - (27.0f64 / 25.0).log2()).abs() < 1e-12);
        assert!((g - 0.111_031_312_388_743_85).abs() < 1e-12);
        assert_eq!(gamma_fn(0.0).unwrap(), 0.0);
        assert!(gamma_fn(1.0 - 1e-9).unwrap().abs() < 1e-6);
        for k in 1..=99 {
            let x = k as f64 / 100.0;
            assert!(gamma_fn(x).unwrap() > 0.0);
            assert!((gamma_fn(x).unwrap() - psi(0.5, x).unwrap()).abs() < 1e-14);
            // gamma' changes sign only at 2/3
            let s = gamma_prime(x).unwrap();
            if x < 0.66 {
                assert!(s > 0.0);
            } else if x > 0.67 {
                assert!(s < 0.0);
            }
        }
        assert!(gamma_fn(1.0).is_err());
    }

    #[test]
    fn lemma2_inequality_scan() {
        let mut x = 1e-6;
        while x < 1.0 - 1e-6 {
            assert!(lemma2_term(x).unwrap() > 0.0, "x = {x}");
            x += 1e-4;
        }
        assert!(lemma2_term(1.0 - 1e-6).unwrap() > 0.0);
        // series and direct branches agree at the switch point
        let t: f64 = 1e-2;
        assert!((lemma2_from_log(t.ln() - 1e-12) - (t / (1.0 - t) + (-t).ln_1p())).abs() < 1e-15);
    }

    #[test]
    fn uniqueness_derivs_examples() {
        let (d1, _) = uniqueness_derivs(1e-8, 0.7).unwrap();
        assert!(d1.abs() < 1e-7);
        assert!(uniqueness_derivs(0.5, 0.8).unwrap().1 > 0.0);
        let (rho, a) = (0.4, 0.7);
        let (d1, d2) = uniqueness_derivs(rho, a).unwrap();
        let fd1 = central(|r| phi(r, a, a).unwrap(), rho);
        let fd2 = central(|r| uniqueness_derivs(r, a).unwrap().0, rho);
        assert!(relative_error(d1, fd1) < FD_RELATIVE);
        assert!(relative_error(d2, fd2) < FD_RELATIVE);
        // 50-digit references
        assert!((d1 - 0.054_005_189_808_061_5).abs() < 1e-15);
        assert!((d2 - 0.231_117_792_605_064_4).abs() < 1e-15);
        assert!(uniqueness_derivs(0.5, 0.5).is_err());
        assert!(uniqueness_derivs(1.0, 0.7).is_err());
    }

    #[test]
    fn lemma1_small_grid() {
        let grid: GridSpec = "12x12x6".parse().unwrap();
        let report = verify_lemma1(&grid, LEMMA1_TOLERANCE).unwrap();
        assert!(report.passed(), "{report:?}");
        assert!(report.min_phi > 0.0);
        assert_eq!(report.cells, 66);
        assert!(report.near_zero_max_phi <= 1e-9);
        assert!("1x5x5".parse::<GridSpec>().is_err());
        assert!("5x5".parse::<GridSpec>().is_err());
    }

    proptest! {
        #[test]
        fn degree_collapses(a in 0.001f64..0.998, gap in 0.0005f64..0.5) {
            let b = (a + gap).min(0.999);
            prop_assume!(a < b);
            let full = expand_p(a, b).unwrap();
            let scale = full[..4].iter().fold(0.0f64, |m, c| m.max(c.abs()));
            prop_assert!(full[4].abs() <= 1e-10 * scale);
            prop_assert!(full[5].abs() <= 1e-10 * scale);
        }

        #[test]
        fn transform_round_trip(a in 0.0001f64..0.9998, t in 0.0001f64..1.0) {
            let b = a + t * (1.0 - a);
            prop_assume!(a < b && b < 1.0);
            let (c, x) = transform_to_cx(a, b).unwrap();
            prop_assert!(c > 0.0 && c < 1.0 && x > 0.0 && x < 1.0);
            let (a2, b2) = transform_to_ab(c, x).unwrap();
            prop_assert!((a - a2).abs() <= 1e-10 && (b - b2).abs() <= 1e-10);
        }
    }
}

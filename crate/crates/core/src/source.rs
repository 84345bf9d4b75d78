//! The `rho`-correlated Rademacher source and the joint law of `(f(X), g(Y))`.
//!
//! The joint law is available three ways: from the spectra
//! ([`joint_distribution`]), by summing over all `4^n` input pairs
//! ([`brute_force_joint`]), and by simulation ([`monte_carlo_joint`]).

use rand::distr::{Bernoulli, Distribution};
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypercube::{BooleanFunction, FourierExpansion};
use crate::rng::stream_rng;
use crate::tolerance::{CLAMP_SLACK, PROB_SLACK};

pub(crate) fn check_rho(rho: f64) -> Result<()> {
    if rho.is_finite() && (-1.0..=1.0).contains(&rho) {
        Ok(())
    } else {
        Err(Error::Domain(format!("correlation {rho} outside [-1, 1]")))
    }
}

/// One pair `(x, y)` of uniform `±1` variables with `E[xy] = rho`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceModel {
    rho: f64,
}

impl SourceModel {
    pub fn new(rho: f64) -> Result<Self> {
        check_rho(rho)?;
        Ok(Self { rho })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `P(x = y) = (1 + rho) / 2`.
    pub fn agree_probability(&self) -> f64 {
        (1.0 + self.rho) / 2.0
    }

    /// The single-letter law as a 2x2 table.
    pub fn joint(&self) -> Joint2x2 {
        let same = (1.0 + self.rho) / 4.0;
        let diff = (1.0 - self.rho) / 4.0;
        Joint2x2 {
            pp: same,
            pm: diff,
            mp: diff,
            mm: same,
            clamped: false,
        }
    }
}

/// Joint law of `(f, g)`: cells `(+1,+1)`, `(+1,-1)`, `(-1,+1)`, `(-1,-1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Joint2x2 {
    pub pp: f64,
    pub pm: f64,
    pub mp: f64,
    pub mm: f64,
    /// Whether a marginally negative entry was clamped to zero.
    pub clamped: bool,
}

impl Joint2x2 {
    /// Validates the cells: nonnegative and summing to one within `PROB_SLACK`.
    pub fn new(pp: f64, pm: f64, mp: f64, mm: f64) -> Result<Self> {
        let j = Self {
            pp,
            pm,
            mp,
            mm,
            clamped: false,
        };
        j.validate()?;
        Ok(j)
    }

    /// Builds a law from possibly marginally negative cells.
    ///
    /// Entries in `[-CLAMP_SLACK, 0)` become zero and set `clamped`; anything
    /// more negative is a `NumericalInconsistency`.
    pub fn from_cells_clamped(cells: [f64; 4]) -> Result<Self> {
        let mut clamped = false;
        let mut out = [0.0; 4];
        for (o, &c) in out.iter_mut().zip(&cells) {
            if c < -CLAMP_SLACK || !c.is_finite() {
                return Err(Error::NumericalInconsistency(format!(
                    "joint cell {c:e} is negative beyond the clamp slack"
                )));
            }
            if c < 0.0 {
                clamped = true;
                *o = 0.0;
            } else {
                *o = c;
            }
        }
        Ok(Self {
            pp: out[0],
            pm: out[1],
            mp: out[2],
            mm: out[3],
            clamped,
        })
    }

    pub fn cells(&self) -> [f64; 4] {
        [self.pp, self.pm, self.mp, self.mm]
    }

    /// `a = P(f = +1)`.
    pub fn marginal_f(&self) -> f64 {
        self.pp + self.pm
    }

    /// `b = P(g = +1)`.
    pub fn marginal_g(&self) -> f64 {
        self.pp + self.mp
    }

    /// `P(f != g)`.
    pub fn disagreement(&self) -> f64 {
        self.pm + self.mp
    }

    /// The law of `(g, f)`.
    pub fn transpose(&self) -> Self {
        Self {
            pm: self.mp,
            mp: self.pm,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let cells = self.cells();
        if cells
            .iter()
            .any(|&c| !c.is_finite() || !(-PROB_SLACK..=1.0 + PROB_SLACK).contains(&c))
        {
            return Err(Error::InvalidDistribution(format!(
                "joint cells {cells:?} are not probabilities"
            )));
        }
        let sum: f64 = cells.iter().sum();
        if (sum - 1.0).abs() > PROB_SLACK {
            return Err(Error::InvalidDistribution(format!(
                "joint cells sum to {sum}"
            )));
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.cells()
            .iter()
            .zip(other.cells())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn horner_theta(levels: &[i64], rho: f64, n: usize) -> f64 {
    // sum_{w>=1} levels[w] rho^w, evaluated from the top level down
    let mut acc = 0.0;
    for &l in levels[1..].iter().rev() {
        acc = (acc + l as f64) * rho;
    }
    acc / 4f64.powi(n as i32 + 1)
}

/// `theta_rho = (1/4) sum_{|S| >= 1} f^(S) g^(S) rho^|S|`.
pub fn theta_rho(f: &FourierExpansion, g: &FourierExpansion, rho: f64) -> Result<f64> {
    let levels = f.level_products(g)?;
    Ok(horner_theta(&levels, rho, f.n()))
}

/// Joint law from biases and the correlation parameter.
pub(crate) fn joint_from_theta(a: f64, b: f64, theta: f64) -> Result<Joint2x2> {
    Joint2x2::from_cells_clamped([
        a * b + theta,
        a * (1.0 - b) - theta,
        (1.0 - a) * b - theta,
        (1.0 - a) * (1.0 - b) + theta,
    ])
}

/// Precomputed per-pair data for repeated evaluation over many `rho`.
#[derive(Clone, Debug)]
pub(crate) struct PairLevels {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub levels: Vec<i64>,
}

impl PairLevels {
    pub fn new(f: &FourierExpansion, g: &FourierExpansion) -> Result<Self> {
        Ok(Self {
            n: f.n(),
            a: f.bias(),
            b: g.bias(),
            levels: f.level_products(g)?,
        })
    }

    pub fn theta(&self, rho: f64) -> f64 {
        horner_theta(&self.levels, rho, self.n)
    }

    pub fn joint(&self, rho: f64) -> Result<Joint2x2> {
        joint_from_theta(self.a, self.b, self.theta(rho))
    }
}

/// The joint law of `(f(X), g(Y))` from the spectra:
/// `(ab + theta, a(1-b) - theta, (1-a)b - theta, (1-a)(1-b) + theta)`.
pub fn joint_distribution(
    f: &FourierExpansion,
    g: &FourierExpansion,
    rho: f64,
) -> Result<Joint2x2> {
    check_rho(rho)?;
    PairLevels::new(f, g)?.joint(rho)
}

/// Largest dimension accepted by [`brute_force_joint`].
pub const BRUTE_FORCE_MAX_N: usize = 13;

/// Oracle: sums the product law over all `4^n` input pairs.
///
/// Masses are accumulated as integer counts per (cell, Hamming distance) and
/// weighted once at the end.
pub fn brute_force_joint(f: &BooleanFunction, g: &BooleanFunction, rho: f64) -> Result<Joint2x2> {
    if f.n() != g.n() {
        return Err(Error::DimensionMismatch {
            left: f.n(),
            right: g.n(),
        });
    }
    let n = f.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::DimensionTooLarge {
            n,
            limit: BRUTE_FORCE_MAX_N,
            what: "brute-force joint enumeration",
        });
    }
    check_rho(rho)?;
    let len = 1usize << n;
    let mut counts = vec![[0u64; 4]; n + 1];
    for x in 0..len {
        let fx = f.bit(x) as usize;
        for y in 0..len {
            let cell = 2 * fx + g.bit(y) as usize;
            counts[(x ^ y).count_ones() as usize][cell] += 1;
        }
    }
    let same = (1.0 + rho) / 4.0;
    let diff = (1.0 - rho) / 4.0;
    let mut cells = [0.0f64; 4];
    for (d, row) in counts.iter().enumerate() {
        let weight = same.powi((n - d) as i32) * diff.powi(d as i32);
        for (c, &k) in cells.iter_mut().zip(row) {
            *c += k as f64 * weight;
        }
    }
    Joint2x2::from_cells_clamped(cells)
}

/// Monte Carlo estimate of the joint law with per-cell standard errors.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarloJoint {
    pub joint: Joint2x2,
    /// `sqrt(p(1-p)/samples)` per cell, same order as [`Joint2x2::cells`].
    pub std_err: [f64; 4],
    pub samples: u64,
    pub seed: u64,
}

/// Samples per independent RNG stream.
pub const MC_CHUNK: u64 = 1 << 16;

/// Draws `samples` i.i.d. copies of `(X, Y)` and tabulates `(f(X), g(Y))`.
///
/// `X` is uniform; each `y_i` equals `x_i` with probability `(1 + rho)/2` and
/// `-x_i` otherwise. Chunk `k` of `MC_CHUNK` samples uses stream `k` of the
/// seed, so the result is identical for any thread count.
pub fn monte_carlo_joint(
    f: &BooleanFunction,
    g: &BooleanFunction,
    rho: f64,
    samples: u64,
    seed: u64,
) -> Result<MonteCarloJoint> {
    if f.n() != g.n() {
        return Err(Error::DimensionMismatch {
            left: f.n(),
            right: g.n(),
        });
    }
    check_rho(rho)?;
    if samples == 0 {
        return Err(Error::Domain("at least one sample is required".into()));
    }
    let n = f.n();
    let flip = Bernoulli::new((1.0 - rho) / 2.0)
        .map_err(|e| Error::Domain(format!("flip probability: {e}")))?;
    let mask = (1u64 << n) - 1;
    let chunks = samples.div_ceil(MC_CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k);
            let todo = MC_CHUNK.min(samples - k * MC_CHUNK);
            let mut counts = [0u64; 4];
            for _ in 0..todo {
                let x = (rng.next_u64() & mask) as usize;
                let mut y = x;
                for i in 0..n {
                    if flip.sample(&mut rng) {
                        y ^= 1 << i;
                    }
                }
                counts[2 * f.bit(x) as usize + g.bit(y) as usize] += 1;
            }
            counts
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold([0u64; 4], |mut acc, c| {
            for (a, b) in acc.iter_mut().zip(c) {
                *a += b;
            }
            acc
        });
    let total = samples as f64;
    let p = counts.map(|c| c as f64 / total);
    let std_err = p.map(|q| (q * (1.0 - q) / total).sqrt());
    Ok(MonteCarloJoint {
        joint: Joint2x2 {
            pp: p[0],
            pm: p[1],
            mp: p[2],
            mm: p[3],
            clamped: false,
        },
        std_err,
        samples,
        seed,
    })
}

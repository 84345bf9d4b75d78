//! Truth tables on `{-1,1}^n`, their Walsh–Hadamard spectra, the noise
//! operator, and the hyperoctahedral symmetry action.
//!
//! Encoding conventions used throughout the crate:
//!
//! * A point `x` is an index `m` in `0..2^n`; bit `i` of `m` is set iff
//!   `x_{i+1} = -1`, so `m = 0` is the all-`+1` point.
//! * A subset `S` of coordinates is a mask in `0..2^n`; bit `i` set iff
//!   coordinate `i+1` belongs to `S`. Hence `chi_S(x(m)) = (-1)^popcount(S & m)`.
//! * A table bit `0` stores the value `+1`, bit `1` stores `-1`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest supported dimension.
pub const MAX_DIMENSION: usize = 20;

fn check_dimension(n: usize) -> Result<()> {
    if (1..=MAX_DIMENSION).contains(&n) {
        Ok(())
    } else {
        Err(Error::InvalidDimension(n))
    }
}

fn word_count(n: usize) -> usize {
    (1usize << n).div_ceil(64)
}

/// Mask of the valid bits in the last table word.
fn tail_mask(n: usize) -> u64 {
    let len = 1usize << n;
    if len % 64 == 0 {
        u64::MAX
    } else {
        (1u64 << (len % 64)) - 1
    }
}

/// Value of the parity `chi_S` at point `m`.
#[inline]
pub fn character(subset: usize, point: usize) -> i64 {
    if (subset & point).count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// A Boolean function `{-1,1}^n -> {-1,1}` stored as a packed truth table.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BooleanFunction {
    n: usize,
    words: Vec<u64>,
}

impl BooleanFunction {
    /// Builds a function from raw table words. Bits beyond `2^n` must be zero.
    pub fn from_words(n: usize, words: Vec<u64>) -> Result<Self> {
        check_dimension(n)?;
        if words.len() != word_count(n) {
            return Err(Error::Domain(format!(
                "expected {} table words for n = {n}, got {}",
                word_count(n),
                words.len()
            )));
        }
        if words[words.len() - 1] & !tail_mask(n) != 0 {
            return Err(Error::Domain(format!(
                "table has bits set beyond 2^{n} entries"
            )));
        }
        Ok(Self { n, words })
    }

    /// Builds a function for `n <= 6` from a single table word.
    pub fn from_word(n: usize, word: u64) -> Result<Self> {
        if n > 6 {
            return Err(Error::DimensionTooLarge {
                n,
                limit: 6,
                what: "single-word tables",
            });
        }
        Self::from_words(n, vec![word])
    }

    /// Builds a function whose table bit at `m` is `minus(m)` (true means `-1`).
    pub fn from_fn(n: usize, mut minus: impl FnMut(usize) -> bool) -> Result<Self> {
        check_dimension(n)?;
        let mut words = vec![0u64; word_count(n)];
        for m in 0..1usize << n {
            if minus(m) {
                words[m / 64] |= 1 << (m % 64);
            }
        }
        Ok(Self { n, words })
    }

    /// The constant function with the given sign.
    pub fn constant(n: usize, positive: bool) -> Result<Self> {
        Self::from_fn(n, |_| !positive)
    }

    /// The parity `chi_S` for the subset mask `subset`.
    pub fn parity(n: usize, subset: usize) -> Result<Self> {
        check_dimension(n)?;
        if subset >> n != 0 {
            return Err(Error::Domain(format!(
                "subset mask {subset:#x} has coordinates beyond n = {n}"
            )));
        }
        Self::from_fn(n, |m| (subset & m).count_ones() % 2 == 1)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of table entries, `2^n`.
    pub fn len(&self) -> usize {
        1 << self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// The single table word, for `n <= 6`.
    pub fn word(&self) -> Option<u64> {
        (self.n <= 6).then(|| self.words[0])
    }

    /// Raw table bit at `m` (true means the value `-1`).
    #[inline]
    pub fn bit(&self, m: usize) -> bool {
        (self.words[m / 64] >> (m % 64)) & 1 == 1
    }

    /// Value `f(x(m))` in `{-1, +1}`.
    #[inline]
    pub fn eval(&self, m: usize) -> i64 {
        if self.bit(m) {
            -1
        } else {
            1
        }
    }

    /// Number of points where `f = +1`.
    pub fn count_plus(&self) -> usize {
        let minus: u32 = self.words.iter().map(|w| w.count_ones()).sum();
        self.len() - minus as usize
    }

    /// `P(f(X) = 1)` under uniform input.
    pub fn bias(&self) -> f64 {
        self.count_plus() as f64 / self.len() as f64
    }

    /// The output-negated function `-f`.
    pub fn negated(&self) -> Self {
        let mask = tail_mask(self.n);
        let mut words: Vec<u64> = self.words.iter().map(|w| !w).collect();
        let last = words.len() - 1;
        words[last] &= mask;
        Self { n: self.n, words }
    }

    /// Values as a `+1/-1` vector.
    pub fn values(&self) -> Vec<i64> {
        (0..self.len()).map(|m| self.eval(m)).collect()
    }
}

impl fmt::Debug for BooleanFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BooleanFunction({self})")
    }
}

/// The dictator `chi_i(x) = x_i`, with `i` counted from 1.
pub fn dictator(n: usize, i: usize) -> Result<BooleanFunction> {
    check_dimension(n)?;
    if i == 0 || i > n {
        return Err(Error::CoordinateOutOfRange { i, n });
    }
    BooleanFunction::from_fn(n, |m| (m >> (i - 1)) & 1 == 1)
}

/// If `f` is `±chi_i`, returns `(i, sign)` with `i` counted from 1.
pub fn as_signed_dictator(f: &BooleanFunction) -> Option<(usize, i64)> {
    (1..=f.n()).find_map(|i| {
        let d = dictator(f.n(), i).ok()?;
        if *f == d {
            Some((i, 1))
        } else if f.negated() == d {
            Some((i, -1))
        } else {
            None
        }
    })
}

// ----------------------------------------------------------------------
// Text format: `n=<K>:<hex>`, digit j carries table bits 4j..4j+3 LSB-first.

impl fmt::Display for BooleanFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={}:", self.n)?;
        let digits = self.len().div_ceil(4);
        for j in 0..digits {
            let nibble = (self.words[(4 * j) / 64] >> ((4 * j) % 64)) & 0xf;
            write!(f, "{nibble:x}")?;
        }
        Ok(())
    }
}

impl FromStr for BooleanFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let err = |position: usize, message: String| Error::Parse { position, message };
        let rest = s
            .strip_prefix("n=")
            .ok_or_else(|| err(0, "expected prefix `n=`".into()))?;
        let colon = rest
            .find(':')
            .ok_or_else(|| err(s.len(), "expected `:` after the dimension".into()))?;
        let n: usize = rest[..colon]
            .parse()
            .map_err(|_| err(2, format!("invalid dimension `{}`", &rest[..colon])))?;
        if !(1..=MAX_DIMENSION).contains(&n) {
            return Err(err(2, format!("dimension {n} outside 1..={MAX_DIMENSION}")));
        }
        let hex_start = 2 + colon + 1;
        let hex = &rest[colon + 1..];
        let len = 1usize << n;
        let digits = len.div_ceil(4);
        if hex.chars().count() != digits {
            return Err(err(
                hex_start,
                format!(
                    "expected {digits} hex digits for n = {n}, found {}",
                    hex.chars().count()
                ),
            ));
        }
        let mut words = vec![0u64; word_count(n)];
        for (j, c) in hex.chars().enumerate() {
            let nibble = c
                .to_digit(16)
                .ok_or_else(|| err(hex_start + j, format!("invalid hex digit `{c}`")))?
                as u64;
            if len < 4 && nibble >> len != 0 {
                return Err(err(
                    hex_start + j,
                    format!("digit `{c}` sets bits beyond the {len}-entry table"),
                ));
            }
            words[(4 * j) / 64] |= nibble << ((4 * j) % 64);
        }
        Ok(Self { n, words })
    }
}

// ----------------------------------------------------------------------
// Fourier expansion

/// Fourier coefficients scaled by `2^n`, so every entry is an exact integer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FourierExpansion {
    n: usize,
    scaled: Vec<i64>,
}

impl FourierExpansion {
    /// Wraps raw scaled coefficients; no Boolean-ness check is made here.
    pub fn from_scaled(n: usize, scaled: Vec<i64>) -> Result<Self> {
        check_dimension(n)?;
        if scaled.len() != 1 << n {
            return Err(Error::Domain(format!(
                "expected {} coefficients for n = {n}, got {}",
                1usize << n,
                scaled.len()
            )));
        }
        Ok(Self { n, scaled })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `2^n`, the scale of the stored coefficients.
    pub fn scale(&self) -> i64 {
        1 << self.n
    }

    pub fn scaled(&self) -> &[i64] {
        &self.scaled
    }

    pub fn scaled_coeff(&self, subset: usize) -> i64 {
        self.scaled[subset]
    }

    /// `f^(S)` as a float.
    pub fn coeff(&self, subset: usize) -> f64 {
        self.scaled[subset] as f64 / self.scale() as f64
    }

    /// `sum_S scaled[S]^2`; equals `4^n` for Boolean functions.
    pub fn parseval_sum(&self) -> i128 {
        self.scaled.iter().map(|&c| (c as i128) * (c as i128)).sum()
    }

    /// Bias `a = (1 + f^(empty)) / 2`.
    pub fn bias(&self) -> f64 {
        (self.scale() + self.scaled[0]) as f64 / (2 * self.scale()) as f64
    }

    /// Exact numerator of the bias over the denominator `2^(n+1)`.
    pub fn bias_numerator(&self) -> i64 {
        self.scale() + self.scaled[0]
    }

    /// Per-level sums `sum_{|S| = w} scaled_f[S] * scaled_g[S]` for `w = 0..=n`.
    pub fn level_products(&self, other: &Self) -> Result<Vec<i64>> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                left: self.n,
                right: other.n,
            });
        }
        let mut levels = vec![0i64; self.n + 1];
        for (s, (&a, &b)) in self.scaled.iter().zip(&other.scaled).enumerate() {
            levels[s.count_ones() as usize] += a * b;
        }
        Ok(levels)
    }
}

fn butterfly(data: &mut [i64]) {
    let len = data.len();
    let mut half = 1;
    while half < len {
        for block in (0..len).step_by(2 * half) {
            for k in block..block + half {
                let (u, v) = (data[k], data[k + half]);
                data[k] = u + v;
                data[k + half] = u - v;
            }
        }
        half *= 2;
    }
}

fn butterfly_f64(data: &mut [f64]) {
    let len = data.len();
    let mut half = 1;
    while half < len {
        for block in (0..len).step_by(2 * half) {
            for k in block..block + half {
                let (u, v) = (data[k], data[k + half]);
                data[k] = u + v;
                data[k + half] = u - v;
            }
        }
        half *= 2;
    }
}

/// Fast Walsh–Hadamard transform: `scaled[S] = sum_m f(x(m)) chi_S(x(m))`.
pub fn wht(f: &BooleanFunction) -> FourierExpansion {
    let mut data = f.values();
    butterfly(&mut data);
    FourierExpansion {
        n: f.n(),
        scaled: data,
    }
}

/// Inverse transform; fails unless every reconstructed value is `±1`.
pub fn inverse_wht(expansion: &FourierExpansion) -> Result<BooleanFunction> {
    let mut data = expansion.scaled.clone();
    butterfly(&mut data);
    let scale = expansion.scale();
    for (m, &v) in data.iter().enumerate() {
        if v != scale && v != -scale {
            return Err(Error::NotBoolean { point: m, value: v });
        }
    }
    BooleanFunction::from_fn(expansion.n, |m| data[m] < 0)
}

/// Coefficients of `T_rho f`, i.e. `f^(S) rho^|S|`.
pub fn noise_operator(expansion: &FourierExpansion, rho: f64) -> Vec<f64> {
    let powers: Vec<f64> = (0..=expansion.n as i32).map(|w| rho.powi(w)).collect();
    expansion
        .scaled
        .iter()
        .enumerate()
        .map(|(s, &c)| c as f64 / expansion.scale() as f64 * powers[s.count_ones() as usize])
        .collect()
}

/// Values `(T_rho f)(x(m))` for every point, i.e. `E[f(X) | Y = x(m)]`.
pub fn noisy_values(expansion: &FourierExpansion, rho: f64) -> Vec<f64> {
    let mut data = noise_operator(expansion, rho);
    butterfly_f64(&mut data);
    data
}

// ----------------------------------------------------------------------
// Symmetries

/// An element of the group generated by coordinate permutations, coordinate
/// sign flips and output negation.
///
/// Acting on `f`, it produces `m -> (-1)^negate_output * f(m')` where bit `j`
/// of `m'` is bit `perm[j]` of `m` xor bit `j` of `flips`. `perm` is
/// zero-based (entry `j` names coordinate `perm[j] + 1`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct InputSymmetry {
    perm: Vec<usize>,
    flips: u32,
    negate_output: bool,
}

impl InputSymmetry {
    pub fn new(perm: Vec<usize>, flips: u32, negate_output: bool) -> Result<Self> {
        let n = perm.len();
        check_dimension(n)?;
        let mut seen = vec![false; n];
        for &p in &perm {
            if p >= n || seen[p] {
                return Err(Error::InvalidSymmetry(format!(
                    "{perm:?} is not a permutation of 0..{n}"
                )));
            }
            seen[p] = true;
        }
        if flips >> n != 0 {
            return Err(Error::InvalidSymmetry(format!(
                "flip mask {flips:#x} exceeds n = {n}"
            )));
        }
        Ok(Self {
            perm,
            flips,
            negate_output,
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new((0..n).collect(), 0, false)
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn flips(&self) -> u32 {
        self.flips
    }

    pub fn negate_output(&self) -> bool {
        self.negate_output
    }

    /// The point map `m -> m'` described on the type.
    #[inline]
    pub fn map_point(&self, m: usize) -> usize {
        let mut out = 0usize;
        for (j, &p) in self.perm.iter().enumerate() {
            out |= ((m >> p) & 1) << j;
        }
        out ^ self.flips as usize
    }

    /// The symmetry whose action equals acting by `self` and then by `then`.
    ///
    /// `apply_symmetry(&apply_symmetry(f, self), then) == apply_symmetry(f, &self.compose(then))`.
    pub fn compose(&self, then: &Self) -> Result<Self> {
        if self.n() != then.n() {
            return Err(Error::DimensionMismatch {
                left: self.n(),
                right: then.n(),
            });
        }
        // point map of the composite is m -> self.map(then.map(m))
        let perm: Vec<usize> = self.perm.iter().map(|&p| then.perm[p]).collect();
        let mut flips = self.flips;
        for (j, &p) in self.perm.iter().enumerate() {
            flips ^= ((then.flips >> p) & 1) << j;
        }
        Self::new(perm, flips, self.negate_output ^ then.negate_output)
    }

    pub fn inverse(&self) -> Self {
        let n = self.n();
        let mut perm = vec![0; n];
        for (j, &p) in self.perm.iter().enumerate() {
            perm[p] = j;
        }
        let mut flips = 0u32;
        for (k, &j) in perm.iter().enumerate() {
            flips |= ((self.flips >> j) & 1) << k;
        }
        Self {
            perm,
            flips,
            negate_output: self.negate_output,
        }
    }
}

/// Acts on `f` by the symmetry `s`.
pub fn apply_symmetry(f: &BooleanFunction, s: &InputSymmetry) -> Result<BooleanFunction> {
    if f.n() != s.n() {
        return Err(Error::DimensionMismatch {
            left: f.n(),
            right: s.n(),
        });
    }
    BooleanFunction::from_fn(f.n(), |m| f.bit(s.map_point(m)) ^ s.negate_output)
}

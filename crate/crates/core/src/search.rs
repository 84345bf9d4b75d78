//! Exhaustive and symmetry-reduced searches over Boolean function pairs.
//!
//! The group acting here is generated by coordinate permutations, coordinate
//! sign flips and output negation. Mutual information is invariant when the
//! same input symmetry is applied to both functions and the outputs are
//! negated independently, so canonical mode fixes `f` to one representative
//! per orbit and lets `g` range over all tables.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::hypercube::{as_signed_dictator, noisy_values, wht, BooleanFunction, InputSymmetry};
use crate::information::{h, mi_unchecked, source_mi};
use crate::rng::stream_rng;
use crate::source::{horner_theta, joint_from_theta};
use crate::tolerance::{ENTROPIC, MAXIMIZER};

/// Largest `n` accepted by [`canonicalize`].
pub const CANONICALIZE_MAX_N: usize = 6;
/// Largest `n` for exhaustive pair enumeration.
pub const EXHAUSTIVE_MAX_N: usize = 3;
/// Largest `n` for canonical mode and the one-sided check.
pub const CANONICAL_MAX_N: usize = 4;
/// Largest `n` for sampled mode.
pub const SAMPLED_MAX_N: usize = 8;
/// Largest pair budget accepted in sampled mode.
pub const SAMPLED_BUDGET_LIMIT: u64 = 1 << 26;
/// Pair budget used in sampled mode when none is given.
pub const DEFAULT_SAMPLED_BUDGET: u64 = 1 << 16;
/// Pairs drawn per random stream in sampled mode.
pub const SAMPLE_CHUNK: u64 = 1 << 12;
/// Longest maximizer list kept in a report; `maximizers_total` counts all.
pub const MAX_LISTED_MAXIMIZERS: usize = 4096;

// ----------------------------------------------------------------------
// symmetry tables

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Every element of the group for dimension `n`: `n! * 2^n * 2` symmetries.
pub fn input_symmetries(n: usize) -> Result<Vec<InputSymmetry>> {
    if n > CANONICALIZE_MAX_N {
        return Err(Error::DimensionTooLarge {
            n,
            limit: CANONICALIZE_MAX_N,
            what: "symmetry enumeration",
        });
    }
    let mut out = Vec::new();
    for perm in permutations(n) {
        for flips in 0..1u32 << n {
            for neg in [false, true] {
                out.push(InputSymmetry::new(perm.clone(), flips, neg)?);
            }
        }
    }
    Ok(out)
}

/// Point maps of all `(perm, flips)` pairs for one `n`.
struct PointMaps {
    n: usize,
    maps: Vec<Vec<u8>>,
}

impl PointMaps {
    fn build(n: usize) -> Self {
        let mut maps = Vec::new();
        for perm in permutations(n) {
            for flips in 0..1u32 << n {
                let s = InputSymmetry::new(perm.clone(), flips, false)
                    .expect("valid permutation and flip mask");
                maps.push((0..1usize << n).map(|m| s.map_point(m) as u8).collect());
            }
        }
        Self { n, maps }
    }

    fn get(n: usize) -> &'static PointMaps {
        static CACHE: [OnceLock<PointMaps>; CANONICALIZE_MAX_N + 1] =
            [const { OnceLock::new() }; CANONICALIZE_MAX_N + 1];
        CACHE[n].get_or_init(|| Self::build(n))
    }

    /// Every image of `word` under the group, with repeats.
    fn orbit(&self, word: u64) -> impl Iterator<Item = u64> + '_ {
        let mask = full_mask(self.n);
        self.maps.iter().flat_map(move |map| {
            let img = permute_word(word, map);
            [img, img ^ mask]
        })
    }
}

fn full_mask(n: usize) -> u64 {
    if n >= 6 {
        u64::MAX
    } else {
        (1u64 << (1 << n)) - 1
    }
}

fn permute_word(word: u64, map: &[u8]) -> u64 {
    map.iter()
        .enumerate()
        .fold(0, |acc, (m, &src)| acc | ((word >> src) & 1) << m)
}

/// Orders tables like their `n=K:hex` strings: digit 0 (bits 0..3) is most significant.
fn lex_rank(word: u64, n: usize) -> u64 {
    let bits = 1usize << n;
    if bits <= 4 {
        return word;
    }
    (0..bits / 4).fold(0, |acc, j| (acc << 4) | ((word >> (4 * j)) & 0xf))
}

// ----------------------------------------------------------------------
// canonical keys

/// The orbit representative whose `n=K:hex` string is lexicographically smallest.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CanonicalKey {
    n: usize,
    rank: u64,
    table: BooleanFunction,
}

impl CanonicalKey {
    pub fn n(&self) -> usize {
        self.n
    }

    /// The representative table.
    pub fn table(&self) -> &BooleanFunction {
        &self.table
    }

    fn from_word(n: usize, word: u64) -> Self {
        Self {
            n,
            rank: lex_rank(word, n),
            table: BooleanFunction::from_word(n, word).expect("n checked by caller"),
        }
    }
}

impl Ord for CanonicalKey {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.n, self.rank).cmp(&(other.n, other.rank))
    }
}

impl PartialOrd for CanonicalKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.table.fmt(f)
    }
}

impl Serialize for CanonicalKey {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Canonical key of `f`; requires `n <= 6`.
pub fn canonicalize(f: &BooleanFunction) -> Result<CanonicalKey> {
    let n = f.n();
    if n > CANONICALIZE_MAX_N {
        return Err(Error::DimensionTooLarge {
            n,
            limit: CANONICALIZE_MAX_N,
            what: "canonicalization",
        });
    }
    let word = f.word().expect("one word for n <= 6");
    let best = PointMaps::get(n)
        .orbit(word)
        .min_by_key(|&w| lex_rank(w, n))
        .expect("orbit is nonempty");
    Ok(CanonicalKey::from_word(n, best))
}

/// One orbit of the group acting on tables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassInfo {
    pub key: CanonicalKey,
    pub orbit_size: usize,
}

/// All orbits for `n <= 4`, sorted by key.
pub fn class_representatives(n: usize) -> Result<Vec<ClassInfo>> {
    check_limit(n, CANONICAL_MAX_N, "class enumeration")?;
    let maps = PointMaps::get(n);
    let count = 1usize << (1 << n);
    let mut visited = vec![false; count];
    let mut out = Vec::new();
    for word in 0..count as u64 {
        if visited[word as usize] {
            continue;
        }
        let mut best = word;
        let mut size = 0;
        for img in maps.orbit(word) {
            if !visited[img as usize] {
                visited[img as usize] = true;
                size += 1;
                if lex_rank(img, n) < lex_rank(best, n) {
                    best = img;
                }
            }
        }
        out.push(ClassInfo {
            key: CanonicalKey::from_word(n, best),
            orbit_size: size,
        });
    }
    out.sort_by(|x, y| x.key.cmp(&y.key));
    Ok(out)
}

fn check_limit(n: usize, limit: usize, what: &'static str) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidDimension(n));
    }
    if n > limit {
        return Err(Error::DimensionTooLarge { n, limit, what });
    }
    Ok(())
}

// ----------------------------------------------------------------------
// reports

/// How the pair space is covered.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    /// Every `(f, g)`; `n <= 3`.
    Exhaustive,
    /// One `f` per orbit, every `g`; `n <= 4`.
    Canonical,
    /// Uniformly random tables; `n <= 8`.
    Sampled,
}

impl fmt::Display for SearchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Exhaustive => "exhaustive",
            Self::Canonical => "canonical",
            Self::Sampled => "sampled",
        })
    }
}

impl FromStr for SearchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(Self::Exhaustive),
            "canonical" => Ok(Self::Canonical),
            "sampled" => Ok(Self::Sampled),
            _ => Err(Error::Parse {
                position: 0,
                message: format!("unknown mode `{s}` (expected exhaustive, canonical or sampled)"),
            }),
        }
    }
}

/// Which inequality a report is about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    /// `I(f(X); g(Y)) <= I(x; y)`.
    Pairs,
    /// `I(f(X); Y) <= I(x; y)`.
    OneSided,
}

/// A single evaluated pair (or function, with `g` absent).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub f: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
    pub rho: f64,
    pub mi: f64,
    pub gap: f64,
}

/// Outcome of a search over pairs or single functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema: u32,
    pub kind: ReportKind,
    pub n: usize,
    pub rho_grid: Vec<f64>,
    pub mode: SearchMode,
    pub pairs_scanned: u64,
    pub evaluations: u64,
    pub max_mi: f64,
    pub max_mi_by_rho: Vec<f64>,
    /// Most negative gap seen (positive if every gap is positive).
    pub max_gap_violation: f64,
    pub worst: Option<PairRecord>,
    /// Gaps below `-tolerance`.
    pub violations: u64,
    /// Entries with `|gap| <= maximizer_tolerance`, at most `MAX_LISTED_MAXIMIZERS`.
    pub maximizers: Vec<PairRecord>,
    pub maximizers_total: u64,
    /// Smallest gap over non-dictator entries at `0 < |rho| < 1`.
    pub min_nondictator_gap: Option<PairRecord>,
    pub tolerance: f64,
    pub maximizer_tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl VerificationReport {
    /// No gap fell below `-tolerance`.
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    /// Fails with `NonDictatorMaximizer` if some non-dictator entry at
    /// `0 < |rho| < 1` came within `maximizer_tolerance` of the bound.
    pub fn check_maximizers(&self) -> Result<()> {
        match &self.min_nondictator_gap {
            Some(r) if r.gap.abs() <= self.maximizer_tolerance || r.gap < 0.0 => {
                Err(Error::NonDictatorMaximizer {
                    f: r.f.clone(),
                    g: r.g.clone().unwrap_or_else(|| "Y".into()),
                    rho: r.rho,
                    gap: r.gap,
                })
            }
            _ => Ok(()),
        }
    }
}

/// Tolerances and sampling parameters shared by the search entry points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchOptions {
    pub tolerance: f64,
    pub maximizer_tolerance: f64,
    /// Pair count in sampled mode.
    pub budget: Option<u64>,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            tolerance: ENTROPIC,
            maximizer_tolerance: MAXIMIZER,
            budget: None,
            seed: 0,
        }
    }
}

impl SearchOptions {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tolerance", self.tolerance),
            ("maximizer tolerance", self.maximizer_tolerance),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

fn check_grid(rho_grid: &[f64]) -> Result<()> {
    if rho_grid.is_empty() {
        return Err(Error::Domain("empty rho grid".into()));
    }
    for &r in rho_grid {
        if !(r.is_finite() && (-1.0..=1.0).contains(&r)) {
            return Err(Error::Domain(format!("rho = {r} outside [-1, 1]")));
        }
    }
    if rho_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("rho grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Runs `op` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, op: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Err(Error::Domain("worker count must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Domain(e.to_string()))?;
    Ok(pool.install(op))
}

// ----------------------------------------------------------------------
// scanning

/// Spectra of a list of tables, stored flat.
struct SpectrumTable {
    n: usize,
    tables: Vec<BooleanFunction>,
    scaled: Vec<i64>,
    bias: Vec<f64>,
    dictator: Vec<Option<usize>>,
}

impl SpectrumTable {
    fn new(n: usize, tables: Vec<BooleanFunction>) -> Self {
        let len = 1usize << n;
        let mut scaled = Vec::with_capacity(tables.len() * len);
        let mut bias = Vec::with_capacity(tables.len());
        let mut dictator = Vec::with_capacity(tables.len());
        for t in &tables {
            let e = wht(t);
            scaled.extend_from_slice(e.scaled());
            bias.push(e.bias());
            dictator.push(as_signed_dictator(t).map(|(i, _)| i));
        }
        Self {
            n,
            tables,
            scaled,
            bias,
            dictator,
        }
    }

    fn all(n: usize) -> Self {
        let tables = (0..1u64 << (1 << n))
            .map(|w| BooleanFunction::from_word(n, w).expect("n <= 4"))
            .collect();
        Self::new(n, tables)
    }

    fn len(&self) -> usize {
        self.tables.len()
    }

    fn spectrum(&self, k: usize) -> &[i64] {
        let len = 1usize << self.n;
        &self.scaled[k * len..(k + 1) * len]
    }
}

/// Per-`rho` constants.
struct RhoPoint {
    rho: f64,
    source: f64,
    interior: bool,
}

fn rho_points(rho_grid: &[f64]) -> Result<Vec<RhoPoint>> {
    rho_grid
        .iter()
        .map(|&rho| {
            Ok(RhoPoint {
                rho,
                source: source_mi(rho)?,
                interior: rho != 0.0 && rho.abs() < 1.0,
            })
        })
        .collect()
}

/// Partial results for one slice of the search space.
struct Fragment {
    pairs: u64,
    evaluations: u64,
    max_mi_by_rho: Vec<f64>,
    worst: Option<PairRecord>,
    violations: u64,
    maximizers: Vec<PairRecord>,
    maximizers_total: u64,
    nondictator: Option<PairRecord>,
}

impl Fragment {
    fn new(rhos: usize) -> Self {
        Self {
            pairs: 0,
            evaluations: 0,
            max_mi_by_rho: vec![0.0; rhos],
            worst: None,
            violations: 0,
            maximizers: Vec::new(),
            maximizers_total: 0,
            nondictator: None,
        }
    }

    /// Records one evaluation; `record` builds the entry only when it is kept.
    #[allow(clippy::too_many_arguments)]
    fn observe(
        &mut self,
        k: usize,
        point: &RhoPoint,
        mi: f64,
        dictator_like: bool,
        opts: &SearchOptions,
        list_limit: usize,
        record: impl Fn(f64, f64) -> PairRecord,
    ) {
        let gap = point.source - mi;
        self.evaluations += 1;
        if mi > self.max_mi_by_rho[k] {
            self.max_mi_by_rho[k] = mi;
        }
        if self.worst.as_ref().is_none_or(|w| gap < w.gap) {
            self.worst = Some(record(mi, gap));
        }
        if gap < -opts.tolerance {
            self.violations += 1;
        }
        if gap.abs() <= opts.maximizer_tolerance {
            self.maximizers_total += 1;
            if self.maximizers.len() < list_limit {
                self.maximizers.push(record(mi, gap));
            }
        }
        if point.interior && !dictator_like && self.nondictator.as_ref().is_none_or(|w| gap < w.gap)
        {
            self.nondictator = Some(record(mi, gap));
        }
    }

    fn merge(mut self, other: Fragment, list_limit: usize) -> Self {
        self.pairs += other.pairs;
        self.evaluations += other.evaluations;
        for (m, o) in self.max_mi_by_rho.iter_mut().zip(other.max_mi_by_rho) {
            *m = m.max(o);
        }
        let keep_first = |a: Option<PairRecord>, b: Option<PairRecord>| match (a, b) {
            (Some(x), Some(y)) => Some(if y.gap < x.gap { y } else { x }),
            (x, y) => x.or(y),
        };
        self.worst = keep_first(self.worst, other.worst);
        self.nondictator = keep_first(self.nondictator, other.nondictator);
        self.violations += other.violations;
        self.maximizers_total += other.maximizers_total;
        let room = list_limit.saturating_sub(self.maximizers.len());
        self.maximizers
            .extend(other.maximizers.into_iter().take(room));
        self
    }

    fn into_report(
        self,
        kind: ReportKind,
        n: usize,
        rho_grid: &[f64],
        mode: SearchMode,
        opts: &SearchOptions,
    ) -> VerificationReport {
        VerificationReport {
            schema: 1,
            kind,
            n,
            rho_grid: rho_grid.to_vec(),
            mode,
            pairs_scanned: self.pairs,
            evaluations: self.evaluations,
            max_mi: self.max_mi_by_rho.iter().copied().fold(0.0, f64::max),
            max_mi_by_rho: self.max_mi_by_rho,
            max_gap_violation: self.worst.as_ref().map_or(0.0, |w| w.gap),
            worst: self.worst,
            violations: self.violations,
            maximizers: self.maximizers,
            maximizers_total: self.maximizers_total,
            min_nondictator_gap: self.nondictator,
            tolerance: opts.tolerance,
            maximizer_tolerance: opts.maximizer_tolerance,
            seed: None,
            budget: None,
            elapsed_ms: None,
            workers: None,
        }
    }
}

fn merge_all(fragments: Vec<Fragment>, rhos: usize, list_limit: usize) -> Fragment {
    fragments
        .into_iter()
        .fold(Fragment::new(rhos), |acc, f| acc.merge(f, list_limit))
}

struct PairEvaluator<'a> {
    n: usize,
    weight: Vec<usize>,
    points: &'a [RhoPoint],
    opts: &'a SearchOptions,
    list_limit: usize,
}

impl PairEvaluator<'_> {
    #[allow(clippy::too_many_arguments)]
    fn pair(
        &self,
        frag: &mut Fragment,
        levels: &mut [i64],
        f: (&[i64], f64, Option<usize>),
        g: (&[i64], f64, Option<usize>),
        names: impl Fn() -> (String, String),
    ) -> Result<()> {
        levels.fill(0);
        for s in 1..f.0.len() {
            levels[self.weight[s]] += f.0[s] * g.0[s];
        }
        let dictator_pair = f.2.is_some() && f.2 == g.2;
        frag.pairs += 1;
        for (k, point) in self.points.iter().enumerate() {
            let theta = horner_theta(levels, point.rho, self.n);
            let mi = mi_unchecked(&joint_from_theta(f.1, g.1, theta)?);
            frag.observe(
                k,
                point,
                mi,
                dictator_pair,
                self.opts,
                self.list_limit,
                |mi, gap| {
                    let (fs, gs) = names();
                    PairRecord {
                        f: fs,
                        g: Some(gs),
                        rho: point.rho,
                        mi,
                        gap,
                    }
                },
            );
        }
        Ok(())
    }
}

/// Scans `fs x gs`, parallel over `fs`, merged in the order of `fs`.
fn scan_product(
    fs: &SpectrumTable,
    gs: &SpectrumTable,
    points: &[RhoPoint],
    opts: &SearchOptions,
    list_limit: usize,
) -> Result<Fragment> {
    let n = fs.n;
    let eval = PairEvaluator {
        n,
        weight: (0..1usize << n).map(|s| s.count_ones() as usize).collect(),
        points,
        opts,
        list_limit,
    };
    let fragments: Vec<Fragment> = (0..fs.len())
        .into_par_iter()
        .map(|i| -> Result<Fragment> {
            let mut frag = Fragment::new(points.len());
            let mut levels = vec![0i64; n + 1];
            let f = (fs.spectrum(i), fs.bias[i], fs.dictator[i]);
            for j in 0..gs.len() {
                let g = (gs.spectrum(j), gs.bias[j], gs.dictator[j]);
                eval.pair(&mut frag, &mut levels, f, g, || {
                    (fs.tables[i].to_string(), gs.tables[j].to_string())
                })?;
            }
            Ok(frag)
        })
        .collect::<Result<_>>()?;
    Ok(merge_all(fragments, points.len(), list_limit))
}

fn scan_sampled(
    n: usize,
    points: &[RhoPoint],
    opts: &SearchOptions,
    budget: u64,
) -> Result<Fragment> {
    let chunks = budget.div_ceil(SAMPLE_CHUNK);
    let fragments: Vec<Fragment> = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<Fragment> {
            let mut rng = stream_rng(opts.seed, c);
            let count = SAMPLE_CHUNK.min(budget - c * SAMPLE_CHUNK);
            let tables: Vec<BooleanFunction> = (0..2 * count)
                .map(|_| BooleanFunction::from_fn(n, |_| rng.random::<bool>()))
                .collect::<Result<_>>()?;
            let spectra = SpectrumTable::new(n, tables);
            let eval = PairEvaluator {
                n,
                weight: (0..1usize << n).map(|s| s.count_ones() as usize).collect(),
                points,
                opts,
                list_limit: MAX_LISTED_MAXIMIZERS,
            };
            let mut frag = Fragment::new(points.len());
            let mut levels = vec![0i64; n + 1];
            for p in 0..count as usize {
                let (i, j) = (2 * p, 2 * p + 1);
                eval.pair(
                    &mut frag,
                    &mut levels,
                    (spectra.spectrum(i), spectra.bias[i], spectra.dictator[i]),
                    (spectra.spectrum(j), spectra.bias[j], spectra.dictator[j]),
                    || (spectra.tables[i].to_string(), spectra.tables[j].to_string()),
                )?;
            }
            Ok(frag)
        })
        .collect::<Result<_>>()?;
    Ok(merge_all(fragments, points.len(), MAX_LISTED_MAXIMIZERS))
}

fn representatives(n: usize) -> Result<SpectrumTable> {
    let tables = class_representatives(n)?
        .into_iter()
        .map(|c| c.key.table)
        .collect();
    Ok(SpectrumTable::new(n, tables))
}

/// Checks `gap(f, g, rho) >= -tolerance` over the pairs selected by `mode`
/// for every `rho` in the grid.
///
/// Runs on the current rayon pool; the report does not depend on its size.
pub fn verify_theorem(
    n: usize,
    rho_grid: &[f64],
    mode: SearchMode,
    opts: &SearchOptions,
) -> Result<VerificationReport> {
    opts.validate()?;
    check_grid(rho_grid)?;
    let points = rho_points(rho_grid)?;
    let (frag, budget) = match mode {
        SearchMode::Exhaustive => {
            check_limit(n, EXHAUSTIVE_MAX_N, "exhaustive mode")?;
            let all = SpectrumTable::all(n);
            (
                scan_product(&all, &all, &points, opts, MAX_LISTED_MAXIMIZERS)?,
                None,
            )
        }
        SearchMode::Canonical => {
            check_limit(n, CANONICAL_MAX_N, "canonical mode")?;
            let reps = representatives(n)?;
            let all = SpectrumTable::all(n);
            (
                scan_product(&reps, &all, &points, opts, MAX_LISTED_MAXIMIZERS)?,
                None,
            )
        }
        SearchMode::Sampled => {
            check_limit(n, SAMPLED_MAX_N, "sampled mode")?;
            let budget = opts.budget.unwrap_or(DEFAULT_SAMPLED_BUDGET);
            if budget == 0 {
                return Err(Error::Domain("sampled mode needs a positive budget".into()));
            }
            if budget > SAMPLED_BUDGET_LIMIT {
                return Err(Error::BudgetExceeded(format!(
                    "{budget} pairs requested, limit is {SAMPLED_BUDGET_LIMIT}"
                )));
            }
            (scan_sampled(n, &points, opts, budget)?, Some(budget))
        }
    };
    let mut report = frag.into_report(ReportKind::Pairs, n, rho_grid, mode, opts);
    if mode == SearchMode::Sampled {
        report.seed = Some(opts.seed);
        report.budget = budget;
    }
    Ok(report)
}

/// `f = ±g = ±chi_i` for some `i`.
pub fn is_dictator_pair(f: &BooleanFunction, g: &BooleanFunction) -> bool {
    match (as_signed_dictator(f), as_signed_dictator(g)) {
        (Some((i, _)), Some((j, _))) => i == j,
        _ => false,
    }
}

/// All pairs with `gap <= tolerance` at one `rho` in `(0, 1)`.
///
/// Uses every pair for `n <= 3` and one `f` per orbit for `n = 4`. Each
/// maximizer must be a dictator pair; otherwise the call fails with
/// `NonDictatorMaximizer`.
pub fn find_maximizers(
    n: usize,
    rho: f64,
    tolerance: f64,
) -> Result<Vec<(BooleanFunction, BooleanFunction)>> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Domain(format!("rho = {rho} outside (0, 1)")));
    }
    let mode = if n <= EXHAUSTIVE_MAX_N {
        SearchMode::Exhaustive
    } else {
        SearchMode::Canonical
    };
    check_limit(n, CANONICAL_MAX_N, "maximizer search")?;
    let opts = SearchOptions {
        maximizer_tolerance: tolerance,
        ..SearchOptions::default()
    };
    opts.validate()?;
    let points = rho_points(&[rho])?;
    let fs = match mode {
        SearchMode::Exhaustive => SpectrumTable::all(n),
        _ => representatives(n)?,
    };
    let all = SpectrumTable::all(n);
    let frag = scan_product(&fs, &all, &points, &opts, usize::MAX)?;
    let mut out = Vec::with_capacity(frag.maximizers.len());
    for r in frag.maximizers {
        let f: BooleanFunction = r.f.parse()?;
        let g: BooleanFunction = r.g.as_deref().unwrap_or_default().parse()?;
        if !is_dictator_pair(&f, &g) {
            return Err(Error::NonDictatorMaximizer {
                f: r.f,
                g: r.g.unwrap_or_default(),
                rho,
                gap: r.gap,
            });
        }
        out.push((f, g));
    }
    Ok(out)
}

/// `I(f(X); Y) = h(a) - 2^-n sum_y h((1 + (T_rho f)(y)) / 2)`.
pub fn one_sided_mi(f: &BooleanFunction, rho: f64) -> Result<f64> {
    crate::source::check_rho(rho)?;
    let e = wht(f);
    Ok(one_sided_from_values(e.bias(), &noisy_values(&e, rho)))
}

fn one_sided_from_values(a: f64, noisy: &[f64]) -> f64 {
    let cond: f64 = noisy
        .iter()
        .map(|&v| h(((1.0 + v) / 2.0).clamp(0.0, 1.0)))
        .sum::<f64>()
        / noisy.len() as f64;
    (h(a) - cond).max(0.0)
}

/// Checks `I(f(X); Y) <= I(x; y) + tolerance` for every table (exhaustive)
/// or one table per orbit (canonical), `n <= 4`.
pub fn verify_conjecture_one_sided(
    n: usize,
    rho_grid: &[f64],
    mode: SearchMode,
    opts: &SearchOptions,
) -> Result<VerificationReport> {
    opts.validate()?;
    check_grid(rho_grid)?;
    check_limit(n, CANONICAL_MAX_N, "one-sided check")?;
    let tables: Vec<BooleanFunction> = match mode {
        SearchMode::Exhaustive => (0..1u64 << (1 << n))
            .map(|w| BooleanFunction::from_word(n, w))
            .collect::<Result<_>>()?,
        SearchMode::Canonical => class_representatives(n)?
            .into_iter()
            .map(|c| c.key.table)
            .collect(),
        SearchMode::Sampled => {
            return Err(Error::Domain(
                "the one-sided check supports exhaustive and canonical modes".into(),
            ))
        }
    };
    let points = rho_points(rho_grid)?;
    let fragments: Vec<Fragment> = tables
        .par_iter()
        .map(|f| {
            let e = wht(f);
            let dictator_like = as_signed_dictator(f).is_some();
            let mut frag = Fragment::new(points.len());
            frag.pairs = 1;
            for (k, point) in points.iter().enumerate() {
                let mi = one_sided_from_values(e.bias(), &noisy_values(&e, point.rho));
                frag.observe(
                    k,
                    point,
                    mi,
                    dictator_like,
                    opts,
                    MAX_LISTED_MAXIMIZERS,
                    |mi, gap| PairRecord {
                        f: f.to_string(),
                        g: None,
                        rho: point.rho,
                        mi,
                        gap,
                    },
                );
            }
            frag
        })
        .collect();
    let frag = merge_all(fragments, points.len(), MAX_LISTED_MAXIMIZERS);
    Ok(frag.into_report(ReportKind::OneSided, n, rho_grid, mode, opts))
}

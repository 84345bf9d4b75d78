//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (no libtest harness) so every line is printed even
//! when earlier criteria fail. Exits nonzero if any criterion fails.

use std::collections::BTreeSet;
use std::panic::{self, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use boolcube_core::bounds::{
    gamma_fn, gamma_prime, phi, phi_derivs, psi_first_deriv, psi_second_deriv, transform_to_ab,
    transform_to_cx, uniqueness_derivs, verify_lemma1, GridSpec, LemmaConstants, LEMMA1_TOLERANCE,
};
use boolcube_core::search::{
    find_maximizers, is_dictator_pair, verify_theorem, with_workers, SearchOptions,
};
use boolcube_core::source::{brute_force_joint, monte_carlo_joint};
use boolcube_core::tolerance::{relative_error, FD_RELATIVE, FD_STEP, MAXIMIZER};
use boolcube_core::{
    dictator, gap, inverse_wht, joint_distribution, theta_rho, wht, BooleanFunction, SearchMode,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_function(rng: &mut impl Rng, n: usize) -> BooleanFunction {
    BooleanFunction::from_fn(n, |_| rng.random()).unwrap()
}

fn steps(start: usize, stop: usize, denom: f64) -> Vec<f64> {
    (start..=stop).map(|k| k as f64 / denom).collect()
}

fn central(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    central_step(f, x, FD_STEP)
}

fn central_step(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

fn exhaustive_pairs() -> Outcome {
    let grid = steps(1, 19, 20.0);
    let mut lines = Vec::new();
    for n in [2usize, 3] {
        let start = Instant::now();
        let report = with_workers(1, || {
            verify_theorem(n, &grid, SearchMode::Exhaustive, &SearchOptions::default())
        })
        .map_err(|e| e.to_string())?
        .map_err(|e| e.to_string())?;
        let elapsed = start.elapsed();
        ensure!(
            report.pairs_scanned == [0, 0, 256, 65_536][n],
            "pairs {}",
            report.pairs_scanned
        );
        ensure!(
            report.violations == 0,
            "n={n}: {} gaps below -1e-9",
            report.violations
        );
        ensure!(
            report.max_gap_violation >= -1e-9,
            "n={n}: min gap {}",
            report.max_gap_violation
        );
        if n == 3 {
            ensure!(elapsed < Duration::from_secs(60), "n=3 took {elapsed:?}");
        }
        lines.push(format!(
            "n={n} pairs={} min_gap={:e} time={:.2}s",
            report.pairs_scanned,
            report.max_gap_violation,
            elapsed.as_secs_f64()
        ));
    }
    Ok(lines.join("; "))
}

fn dictator_maximizers() -> Outcome {
    let mut lines = Vec::new();
    for n in [2usize, 3] {
        let mut sets = Vec::new();
        for rho in [0.25, 0.5, 0.9] {
            let pairs = find_maximizers(n, rho, MAXIMIZER).map_err(|e| e.to_string())?;
            ensure!(
                pairs.iter().all(|(f, g)| is_dictator_pair(f, g)),
                "non-dictator pair"
            );
            let set: BTreeSet<(String, String)> = pairs
                .iter()
                .map(|(f, g)| (f.to_string(), g.to_string()))
                .collect();
            ensure!(
                set.len() == 4 * n,
                "n={n} rho={rho}: {} maximizers",
                set.len()
            );
            sets.push(set);
        }
        ensure!(
            sets.windows(2).all(|w| w[0] == w[1]),
            "n={n}: set depends on rho"
        );
        lines.push(format!("n={n} maximizers={}", sets[0].len()));
    }
    // a loose tolerance admits non-dictators, which must surface as exit code 70
    let status = Command::new(env!("CARGO_BIN_EXE_boolcube"))
        .args([
            "verify",
            "--n",
            "2",
            "--rho-grid",
            "0.5",
            "--max-tol",
            "0.2",
            "--workers",
            "1",
        ])
        .output()
        .map_err(|e| e.to_string())?
        .status;
    ensure!(
        status.code() == Some(70),
        "loose tolerance exit code {:?}",
        status.code()
    );
    lines.push("non-dictator exit=70".into());
    Ok(lines.join("; "))
}

fn dictator_equality() -> Outcome {
    let mut worst = 0.0f64;
    for n in 1..=5 {
        for i in 1..=n {
            let d = dictator(n, i).unwrap();
            for rho in steps(1, 9, 10.0) {
                let g = gap(&d, &d, rho).map_err(|e| e.to_string())?;
                worst = worst.max(g.abs());
            }
        }
    }
    ensure!(worst <= 1e-12, "max |gap| = {worst:e}");
    Ok(format!("max |gap| = {worst:e}"))
}

fn oracle_equivalence() -> Outcome {
    let (mut joint_dev, mut theta_dev) = (0.0f64, 0.0f64);
    let mut check = |f: &BooleanFunction, g: &BooleanFunction, rho: f64| -> Result<(), String> {
        let (fe, ge) = (wht(f), wht(g));
        let exact = joint_distribution(&fe, &ge, rho).map_err(|e| e.to_string())?;
        let brute = brute_force_joint(f, g, rho).map_err(|e| e.to_string())?;
        joint_dev = joint_dev.max(exact.max_abs_diff(&brute));
        // P(f = 1, g = 1) - ab
        let theta = theta_rho(&fe, &ge, rho).map_err(|e| e.to_string())?;
        theta_dev = theta_dev.max((brute.pp - fe.bias() * ge.bias() - theta).abs());
        Ok(())
    };
    let tables: Vec<BooleanFunction> = (0..16)
        .map(|w| BooleanFunction::from_word(2, w).unwrap())
        .collect();
    for f in &tables {
        for g in &tables {
            for rho in steps(0, 10, 10.0) {
                check(f, g, rho)?;
            }
        }
    }
    let mut r = rng(4);
    for _ in 0..10_000 {
        let (f, g) = (random_function(&mut r, 4), random_function(&mut r, 4));
        let rho = r.random_range(-1.0..=1.0);
        check(&f, &g, rho)?;
    }
    ensure!(joint_dev < 1e-10, "joint deviation {joint_dev:e}");
    ensure!(theta_dev <= 1e-12, "theta deviation {theta_dev:e}");
    Ok(format!(
        "max joint dev {joint_dev:e}, max theta dev {theta_dev:e}"
    ))
}

fn lemma_grid() -> Outcome {
    let start = Instant::now();
    let report =
        verify_lemma1(&GridSpec::default(), LEMMA1_TOLERANCE).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure!(report.min_phi > 0.0, "min phi {}", report.min_phi);
    ensure!(report.violations == 0, "{} violations", report.violations);
    ensure!(
        report.certificates_failed == 0,
        "failed certificates: {:?}",
        report.failures
    );
    ensure!(
        report.max_collapse_ratio <= 1e-10,
        "collapse ratio {:e}",
        report.max_collapse_ratio
    );
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!(
        "cells={} min_phi={:e} certificates=100% time={:.2}s",
        report.cells,
        report.min_phi,
        elapsed.as_secs_f64()
    ))
}

/// Interior points use the standard step. Within 30% of `rho_+` the factor
/// `alpha(1-beta) - C rho` vanishes and the step-1e-5 truncation error alone
/// reaches a few 1e-6, so that band is checked separately with step 1e-6.
fn derivative_cross_checks() -> Outcome {
    let mut r = rng(6);
    let (mut interior, mut band, mut equal) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let a: f64 = r.random_range(0.02..0.97);
        let b: f64 = r.random_range(a + 0.01..0.99);
        let k = LemmaConstants::new(a, b).unwrap();
        let samples = [
            (r.random_range(0.01..0.7), FD_STEP, &mut interior),
            (r.random_range(0.7..0.95), 1e-6, &mut band),
        ];
        for (t, h, worst) in samples {
            let rho = t * k.rho_plus;
            let (d1, d2) = phi_derivs(rho, a, b).map_err(|e| e.to_string())?;
            let fd1 = central_step(|t| phi(t, a, b).unwrap(), rho, h);
            let fd2 = central_step(|t| phi_derivs(t, a, b).unwrap().0, rho, h);
            *worst = worst
                .max(relative_error(d1, fd1))
                .max(relative_error(d2, fd2));
        }

        let a: f64 = r.random_range(0.51..0.99);
        let rho: f64 = r.random_range(0.01..0.99);
        let (u1, u2) = uniqueness_derivs(rho, a).map_err(|e| e.to_string())?;
        let fu1 = central(|t| phi(t, a, a).unwrap(), rho);
        let fu2 = central(|t| uniqueness_derivs(t, a).unwrap().0, rho);
        equal = equal
            .max(relative_error(u1, fu1))
            .max(relative_error(u2, fu2));
    }
    ensure!(
        interior < FD_RELATIVE,
        "interior worst relative error {interior:e}"
    );
    ensure!(
        band < FD_RELATIVE,
        "near-boundary worst relative error {band:e}"
    );
    ensure!(
        equal < FD_RELATIVE,
        "equal-bias worst relative error {equal:e}"
    );
    Ok(format!(
        "3000 points, worst relative error: interior {interior:e}, near rho_+ {band:e}, equal bias {equal:e}"
    ))
}

fn boundary_constants() -> Outcome {
    let g = gamma_fn(2.0 / 3.0).map_err(|e| e.to_string())?;
    let target = (27.0f64 / 25.0).log2();
    ensure!((g - target).abs() <= 1e-12, "gamma(2/3) = {g}");
    let gp = gamma_prime(2.0 / 3.0).map_err(|e| e.to_string())?;
    ensure!(gp.abs() <= 1e-10, "gamma'(2/3) = {gp:e}");
    let mut r = rng(7);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let x: f64 = r.random_range(1e-6..1.0 - 1e-6);
        worst = worst.max(psi_first_deriv(0.5, x).map_err(|e| e.to_string())?.abs());
    }
    ensure!(worst <= 1e-9, "|psi'(1/2, x)| up to {worst:e}");
    let mut min_second = f64::INFINITY;
    for i in 1..=100 {
        for j in 1..=100 {
            let (c, x) = (i as f64 / 101.0, j as f64 / 101.0);
            min_second = min_second.min(psi_second_deriv(c, x).map_err(|e| e.to_string())?);
        }
    }
    ensure!(min_second > 0.0, "psi'' min {min_second:e}");
    Ok(format!(
        "gamma(2/3)={g}, gamma'(2/3)={gp:e}, max|psi'(1/2,x)|={worst:e}, min psi''={min_second:e}"
    ))
}

fn transformation_round_trip() -> Outcome {
    let mut r = rng(8);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let a: f64 = r.random_range(1e-4..1.0 - 1e-4);
        let b: f64 = r.random_range(a..1.0);
        if !(a < b && b < 1.0) {
            continue;
        }
        let (c, x) = transform_to_cx(a, b).map_err(|e| e.to_string())?;
        let (a2, b2) = transform_to_ab(c, x).map_err(|e| e.to_string())?;
        worst = worst.max((a - a2).abs()).max((b - b2).abs());
    }
    ensure!(worst <= 1e-10, "round-trip error {worst:e}");
    Ok(format!("10^4 points, max error {worst:e}"))
}

fn exactness_layer() -> Outcome {
    let mut r = rng(9);
    for _ in 0..10_000 {
        let n = r.random_range(1..=10);
        let f = random_function(&mut r, n);
        let e = wht(&f);
        ensure!(
            e.parseval_sum() == 1i128 << (2 * n),
            "Parseval fails for {f}"
        );
        ensure!(
            inverse_wht(&e).map_err(|e| e.to_string())? == f,
            "round trip fails for {f}"
        );
    }
    Ok("10^4 functions, n <= 10: integer Parseval and bit-exact round trip".into())
}

fn monte_carlo_consistency() -> Outcome {
    let mut r = rng(10);
    let (mut beyond4, mut beyond3, mut max_z) = (0, 0, 0.0f64);
    for k in 0..20 {
        let (f, g) = (random_function(&mut r, 6), random_function(&mut r, 6));
        let rho = r.random_range(-1.0..=1.0);
        let mc = monte_carlo_joint(&f, &g, rho, 1_000_000, 1000 + k).map_err(|e| e.to_string())?;
        let exact = joint_distribution(&wht(&f), &wht(&g), rho).map_err(|e| e.to_string())?;
        for ((p, q), se) in mc
            .joint
            .cells()
            .into_iter()
            .zip(exact.cells())
            .zip(mc.std_err)
        {
            let dev = (p - q).abs();
            if se == 0.0 {
                ensure!(dev == 0.0, "deterministic cell deviates by {dev}");
                continue;
            }
            let z = dev / se;
            max_z = max_z.max(z);
            beyond4 += usize::from(z > 4.0);
            beyond3 += usize::from(z > 3.0);
        }
    }
    ensure!(beyond4 == 0, "{beyond4} cells beyond 4 standard errors");
    ensure!(beyond3 <= 1, "{beyond3} cells beyond 3 standard errors");
    Ok(format!(
        "80 cells, max z = {max_z:.3}, beyond 3 sigma: {beyond3}"
    ))
}

fn determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("boolcube-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let mut bodies = Vec::new();
    for workers in ["1", "8"] {
        let path = dir.join(format!("verify-{workers}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_boolcube"))
            .args([
                "verify",
                "--n",
                "3",
                "--mode",
                "exhaustive",
                "--rho-grid",
                "0.05:0.95:0.05",
            ])
            .args(["--workers", workers, "--out"])
            .arg(&path)
            .output()
            .map_err(|e| e.to_string())?
            .status;
        ensure!(
            status.success(),
            "workers={workers}: exit {:?}",
            status.code()
        );
        bodies.push(std::fs::read(&path).map_err(|e| e.to_string())?);
    }
    let _ = std::fs::remove_dir_all(&dir);
    ensure!(
        bodies[0] == bodies[1],
        "reports differ between 1 and 8 workers"
    );
    Ok(format!("{} identical bytes", bodies[0].len()))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("exhaustive pair inequality, n = 2, 3", exhaustive_pairs),
        ("maximizers are dictator pairs", dictator_maximizers),
        ("dictator equality", dictator_equality),
        ("spectral joint law vs brute force", oracle_equivalence),
        ("phi grid certificate", lemma_grid),
        (
            "closed-form derivatives vs finite differences",
            derivative_cross_checks,
        ),
        ("boundary function constants", boundary_constants),
        ("change of variables round trip", transformation_round_trip),
        ("integer exactness of the transform", exactness_layer),
        ("Monte Carlo consistency", monte_carlo_consistency),
        ("report determinism across worker counts", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", k + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

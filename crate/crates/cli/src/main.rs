//! `boolcube`: analysis, verification and scan export from the command line.
//!
//! Exit codes: 0 success, 2 a checked inequality or certificate failed,
//! 64 usage error, 70 internal inconsistency.

mod grid;

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use boolcube_core::bounds::{
    gamma_fn, gamma_prime, p_direct, phi, phi_derivs, psi, psi_first_deriv, psi_second_deriv,
    verify_lemma1, GridSpec, LemmaConstants, LEMMA1_TOLERANCE,
};
use boolcube_core::search::{
    verify_conjecture_one_sided, verify_theorem, with_workers, SearchOptions,
};
use boolcube_core::source::monte_carlo_joint;
use boolcube_core::tolerance::{ENTROPIC, MAXIMIZER};
use boolcube_core::{
    joint_distribution, mutual_information, source_mi, theta_rho, wht, BooleanFunction, Error,
    SearchMode, VerificationReport,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use grid::parse_grid;

const EXIT_VIOLATION: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_INTERNAL: u8 = 70;

#[derive(Parser, Debug)]
#[command(
    name = "boolcube",
    version,
    about = "Boolean functions under correlated inputs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the Fourier expansion of a table.
    Fourier {
        /// Table in `n=K:hex` form.
        table: String,
    },
    /// Joint law and mutual information of a pair at one correlation.
    Mi {
        f: String,
        g: String,
        #[arg(long, value_parser = parse_rho)]
        rho: f64,
        #[arg(long, default_value_t = ENTROPIC, value_parser = parse_tolerance)]
        tol: f64,
        #[arg(long)]
        json: bool,
    },
    /// Check the pair inequality over all (or sampled) pairs.
    Verify(SearchArgs),
    /// Check the one-sided inequality over single functions.
    Conjecture(SearchArgs),
    /// Certify phi >= 0 on a grid of the valid region.
    Lemma1 {
        /// Resolution `AxBxR`.
        #[arg(long, default_value = "50x50x20")]
        grid: String,
        #[arg(long, default_value_t = LEMMA1_TOLERANCE, value_parser = parse_tolerance)]
        tol: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Write a CSV of phi, psi or gamma for plotting.
    Scan {
        #[arg(long, value_enum)]
        what: ScanTarget,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        /// Correlation grid for phi; `rmax` names the upper end of the domain.
        #[arg(long, default_value = "0:rmax:0.01")]
        rho: String,
        /// Fixed x for psi.
        #[arg(long)]
        x: Option<f64>,
        /// Grid of x (gamma) or c (psi).
        #[arg(long, default_value = "0.01:0.99:0.01")]
        range: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo estimate of the joint law next to the exact one.
    Sample {
        f: String,
        g: String,
        #[arg(long, value_parser = parse_rho)]
        rho: f64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// Worker threads; output does not depend on this.
    #[arg(long, env = "BOOLCUBE_WORKERS")]
    workers: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value = "0.1:0.9:0.1")]
    rho_grid: String,
    #[arg(long, value_enum, default_value_t = ModeArg::Exhaustive)]
    mode: ModeArg,
    #[arg(long, default_value_t = ENTROPIC, value_parser = parse_tolerance)]
    tol: f64,
    #[arg(long, default_value_t = MAXIMIZER, value_parser = parse_tolerance)]
    max_tol: f64,
    /// Pair count in sampled mode.
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Add elapsed_ms and workers to the report (makes it run-dependent).
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Exhaustive,
    Canonical,
    Sampled,
}

impl From<ModeArg> for SearchMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Exhaustive => SearchMode::Exhaustive,
            ModeArg::Canonical => SearchMode::Canonical,
            ModeArg::Sampled => SearchMode::Sampled,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScanTarget {
    Phi,
    Psi,
    Gamma,
}

fn parse_rho(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (-1.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("rho = {v} is outside [-1, 1]"))
    }
}

fn parse_tolerance(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("tolerance must be positive, got {v}"))
    }
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INTERNAL,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidDimension(_)
            | Error::DimensionMismatch { .. }
            | Error::DimensionTooLarge { .. }
            | Error::CoordinateOutOfRange { .. }
            | Error::Parse { .. }
            | Error::Domain(_)
            | Error::ThetaOutOfRange { .. }
            | Error::BudgetExceeded(_) => EXIT_USAGE,
            _ => EXIT_INTERNAL,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> CmdResult {
    match command {
        Command::Fourier { table } => cmd_fourier(&table),
        Command::Mi {
            f,
            g,
            rho,
            tol,
            json,
        } => cmd_mi(&f, &g, rho, tol, json),
        Command::Verify(args) => cmd_search(args, false),
        Command::Conjecture(args) => cmd_search(args, true),
        Command::Lemma1 { grid, tol, common } => cmd_lemma1(&grid, tol, &common),
        Command::Scan {
            what,
            alpha,
            beta,
            rho,
            x,
            range,
            out,
        } => cmd_scan(what, alpha, beta, &rho, x, &range, out),
        Command::Sample {
            f,
            g,
            rho,
            samples,
            seed,
            common,
        } => cmd_sample(&f, &g, rho, samples, seed, &common),
    }
}

fn parse_table(s: &str) -> Result<BooleanFunction, Failure> {
    s.parse::<BooleanFunction>()
        .map_err(|e| Failure::usage(format!("`{s}`: {e}")))
}

fn workers(common: &CommonArgs) -> Result<usize, Failure> {
    match common.workers {
        Some(0) => Err(Failure::usage("--workers must be positive")),
        Some(w) => Ok(w),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn in_pool<T: Send>(common: &CommonArgs, op: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    Ok(with_workers(workers(common)?, op)?)
}

/// Writes `text` to `out` and returns true, or returns false if `out` is unset.
fn write_out(out: &Option<PathBuf>, text: &str) -> Result<bool, Failure> {
    match out {
        Some(path) => {
            fs::write(path, text)
                .map_err(|e| Failure::internal(format!("{}: {e}", path.display())))?;
            Ok(true)
        }
        None => Ok(false),
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, Failure> {
    let mut s =
        serde_json::to_string_pretty(value).map_err(|e| Failure::internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Report to the file or stdout; the summary goes to stdout or stderr accordingly.
fn emit(out: &Option<PathBuf>, body: &str, summary: &str) -> Result<(), Failure> {
    if write_out(out, body)? {
        println!("{summary}");
    } else {
        print!("{body}");
        eprintln!("{summary}");
    }
    Ok(())
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn fraction(num: i64, den: i64) -> String {
    let d = gcd(num, den).max(1);
    let (p, q) = (num / d, den / d);
    if q == 1 {
        format!("{p}")
    } else {
        format!("{p}/{q}")
    }
}

fn subset_label(s: usize) -> String {
    if s == 0 {
        return "S=∅".into();
    }
    let items: Vec<String> = (0..usize::BITS as usize)
        .filter(|i| s >> i & 1 == 1)
        .map(|i| (i + 1).to_string())
        .collect();
    format!("S={{{}}}", items.join(","))
}

fn cmd_fourier(table: &str) -> CmdResult {
    let f = parse_table(table)?;
    let e = wht(&f);
    let mut text = String::new();
    let _ = writeln!(text, "n = {}", f.n());
    let _ = writeln!(
        text,
        "a = {} ({})",
        fraction(e.bias_numerator(), 2 * e.scale()),
        e.bias()
    );
    for (s, &c) in e.scaled().iter().enumerate() {
        if c != 0 {
            let _ = writeln!(
                text,
                "{}: {} ({})",
                subset_label(s),
                fraction(c, e.scale()),
                e.coeff(s)
            );
        }
    }
    print!("{text}");
    Ok(0)
}

fn cmd_mi(f: &str, g: &str, rho: f64, tol: f64, as_json: bool) -> CmdResult {
    let (f, g) = (parse_table(f)?, parse_table(g)?);
    if f.n() != g.n() {
        return Err(Error::DimensionMismatch {
            left: f.n(),
            right: g.n(),
        }
        .into());
    }
    let (fe, ge) = (wht(&f), wht(&g));
    let joint = joint_distribution(&fe, &ge, rho)?;
    let theta = theta_rho(&fe, &ge, rho)?;
    let mi = mutual_information(&joint)?;
    let source = source_mi(rho)?;
    let gap = source - mi;
    if as_json {
        let report = json!({
            "schema": 1,
            "f": f.to_string(),
            "g": g.to_string(),
            "rho": rho,
            "joint": joint,
            "theta": theta,
            "a": fe.bias(),
            "b": ge.bias(),
            "mi": mi,
            "source_mi": source,
            "gap": gap,
        });
        print!("{}", to_json(&report)?);
    } else {
        println!(
            "joint: pp={} pm={} mp={} mm={}{}",
            joint.pp,
            joint.pm,
            joint.mp,
            joint.mm,
            if joint.clamped { " (clamped)" } else { "" }
        );
        println!("theta = {theta}");
        println!("a = {}", fe.bias());
        println!("b = {}", ge.bias());
        println!("I(f;g) = {mi}");
        println!("I(x;y) = {source}");
        println!("gap = {gap}");
    }
    Ok(if gap >= -tol { 0 } else { EXIT_VIOLATION })
}

fn cmd_search(args: SearchArgs, one_sided: bool) -> CmdResult {
    let rho_grid = parse_grid(&args.rho_grid, None).map_err(Failure::usage)?;
    let opts = SearchOptions {
        tolerance: args.tol,
        maximizer_tolerance: args.max_tol,
        budget: args.budget,
        seed: args.seed,
    };
    let mode = SearchMode::from(args.mode);
    let threads = workers(&args.common)?;
    let start = Instant::now();
    let mut report: VerificationReport = in_pool(&args.common, || {
        if one_sided {
            verify_conjecture_one_sided(args.n, &rho_grid, mode, &opts)
        } else {
            verify_theorem(args.n, &rho_grid, mode, &opts)
        }
    })??;
    if args.timing {
        report.elapsed_ms = Some(start.elapsed().as_millis() as u64);
        report.workers = Some(threads);
    }
    let status = if report.passed() { "PASS" } else { "FAIL" };
    let summary = format!(
        "{status} pairs={} maxviol={:e} maximizers={}",
        report.pairs_scanned, report.max_gap_violation, report.maximizers_total
    );
    emit(&args.common.out, &to_json(&report)?, &summary)?;
    if !report.passed() {
        return Ok(EXIT_VIOLATION);
    }
    report.check_maximizers()?;
    Ok(0)
}

fn cmd_lemma1(grid: &str, tol: f64, common: &CommonArgs) -> CmdResult {
    let spec: GridSpec = grid.parse()?;
    let report = in_pool(common, || verify_lemma1(&spec, tol))??;
    let status = if report.passed() { "PASS" } else { "FAIL" };
    let summary = format!(
        "{status} cells={} min_phi={:e} violations={} certificates_failed={}",
        report.cells, report.min_phi, report.violations, report.certificates_failed
    );
    emit(&common.out, &to_json(&report)?, &summary)?;
    Ok(if report.passed() { 0 } else { EXIT_VIOLATION })
}

fn csv_value(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn cmd_scan(
    what: ScanTarget,
    alpha: Option<f64>,
    beta: Option<f64>,
    rho: &str,
    x: Option<f64>,
    range: &str,
    out: Option<PathBuf>,
) -> CmdResult {
    let mut csv = String::new();
    let mut failed = false;
    match what {
        ScanTarget::Gamma => {
            let xs = parse_grid(range, None).map_err(Failure::usage)?;
            csv.push_str("# boolcube-scan schema=1 what=gamma\nx,gamma,gamma_prime\n");
            for x in xs {
                let g = gamma_fn(x)?;
                failed |= x > 0.0 && g <= 0.0;
                let _ = writeln!(csv, "{x},{g},{}", gamma_prime(x)?);
            }
        }
        ScanTarget::Psi => {
            let x = x.ok_or_else(|| Failure::usage("psi scan needs --x"))?;
            let cs = parse_grid(range, None).map_err(Failure::usage)?;
            csv.push_str(&format!(
                "# boolcube-scan schema=1 what=psi x={x}\nc,psi,psi_d1,psi_d2\n"
            ));
            for c in cs {
                let d2 = psi_second_deriv(c, x)?;
                failed |= d2 <= 0.0;
                let _ = writeln!(csv, "{c},{},{},{d2}", psi(c, x)?, psi_first_deriv(c, x)?);
            }
        }
        ScanTarget::Phi => {
            let (a, b) = match (alpha, beta) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(Failure::usage("phi scan needs --alpha and --beta")),
            };
            let k = LemmaConstants::new(a, b)?;
            let rhos = parse_grid(rho, Some(k.rho_plus)).map_err(Failure::usage)?;
            csv.push_str(&format!(
                "# boolcube-scan schema=1 what=phi alpha={a} beta={b} rho_plus={}\nrho,phi,phi_d1,phi_d2,p\n",
                k.rho_plus
            ));
            for r in rhos {
                let value = phi(r, a, b)?;
                failed |= r > 0.0 && value <= 0.0;
                let derivs = if r < k.rho_plus {
                    Some(phi_derivs(r, a, b)?)
                } else {
                    None
                };
                let _ = writeln!(
                    csv,
                    "{r},{value},{},{},{}",
                    csv_value(derivs.map(|d| d.0)),
                    csv_value(derivs.map(|d| d.1)),
                    p_direct(r, a, b)?
                );
            }
        }
    }
    if !write_out(&out, &csv)? {
        print!("{csv}");
    }
    Ok(if failed { EXIT_VIOLATION } else { 0 })
}

fn cmd_sample(
    f: &str,
    g: &str,
    rho: f64,
    samples: u64,
    seed: u64,
    common: &CommonArgs,
) -> CmdResult {
    let (f, g) = (parse_table(f)?, parse_table(g)?);
    let mc = in_pool(common, || monte_carlo_joint(&f, &g, rho, samples, seed))??;
    let exact = joint_distribution(&wht(&f), &wht(&g), rho)?;
    let z: Vec<f64> = mc
        .joint
        .cells()
        .iter()
        .zip(exact.cells())
        .zip(mc.std_err)
        .map(|((&p, q), se)| if se > 0.0 { (p - q) / se } else { 0.0 })
        .collect();
    let max_abs_z = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let report = json!({
        "schema": 1,
        "f": f.to_string(),
        "g": g.to_string(),
        "rho": rho,
        "samples": samples,
        "seed": seed,
        "monte_carlo": mc.joint,
        "std_err": mc.std_err,
        "exact": exact,
        "z": z,
        "max_abs_z": max_abs_z,
    });
    let summary = format!("samples={samples} max_abs_z={max_abs_z:.3}");
    emit(&common.out, &to_json(&report)?, &summary)?;
    Ok(0)
}

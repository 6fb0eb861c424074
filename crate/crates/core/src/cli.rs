//! Command-line front end.
//!
//! Exit codes: 0 success, 1 numerical failure other than breakdown or an
//! I/O error, 2 factorization breakdown, 3 invalid configuration. Errors go
//! to stderr as one JSON object.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::json;

use crate::darboux::{self, cospi};
use crate::diagnostics::{self, VerdictOptions, DEFAULT_BOUND_THRESHOLD, DEFAULT_SEED};
use crate::error::Error;
use crate::jacobi;
use crate::measures::{chebyshev_measure, MeasureSpec, SignedMeasureSpec};
use crate::pade;
use crate::spectral::{self, TOL_SUPPORT};
use crate::Precision;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_BREAKDOWN: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "gsym",
    version,
    about = "Shifted Darboux transforms, G-symmetric spectra and Pade poles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct MeasureArg {
    /// `chebyshev` or a path to a measure JSON file.
    #[arg(long, default_value = "chebyshev")]
    measure: String,
}

#[derive(Debug, Args)]
struct ShiftArgs {
    /// Shift point; repeat for a chain of shifts.
    #[arg(long = "shift", allow_negative_numbers = true)]
    shifts: Vec<f64>,
    /// Use the single shift `cos(pi alpha)`.
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Factorize `J - xI` and write pivots with the transformed rows as CSV.
    Transform {
        #[command(flatten)]
        measure: MeasureArg,
        #[command(flatten)]
        shift: ShiftArgs,
        #[arg(long)]
        n: usize,
        #[arg(long, env = "SPECTRAL_PRECISION")]
        precision: Option<Precision>,
        /// Output file prefix; stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Eigenvalues of the transformed truncations for each order, as JSON.
    Spectrum {
        #[command(flatten)]
        measure: MeasureArg,
        #[command(flatten)]
        shift: ShiftArgs,
        /// Orders, e.g. `1,5,10..20`.
        #[arg(long = "n-list")]
        n_list: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Pade pole and error tables (`<prefix>_poles.csv`, `<prefix>_errors.csv`).
    Pade {
        #[command(flatten)]
        measure: MeasureArg,
        #[command(flatten)]
        shift: ShiftArgs,
        #[arg(long = "n-list")]
        n_list: String,
        /// Probe point `re` or `re,im`; repeatable. Defaults to 2 and 2i.
        #[arg(long = "probe", allow_negative_numbers = true)]
        probes: Vec<String>,
        #[arg(long, default_value_t = TOL_SUPPORT)]
        tol: f64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Boundedness diagnostics and verdict, as JSON.
    Diagnose {
        #[command(flatten)]
        measure: MeasureArg,
        #[command(flatten)]
        shift: ShiftArgs,
        #[arg(long = "N", default_value_t = 10_000)]
        big_n: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long = "bound-threshold", default_value_t = DEFAULT_BOUND_THRESHOLD)]
        bound_threshold: f64,
        #[arg(long, env = "SPECTRAL_PRECISION")]
        precision: Option<Precision>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Gauss rule of the measure as CSV.
    Quad {
        #[command(flatten)]
        measure: MeasureArg,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Golden-mean Chebyshev case against the bounded shift -1.5.
    StahlDemo {
        #[arg(long = "N", default_value_t = 10_000)]
        big_n: usize,
        #[arg(long = "n-max", default_value_t = 300)]
        n_max: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum Failure {
    Lib(Error),
    Config(String),
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Lib(e) if e.is_breakdown() => EXIT_BREAKDOWN,
            Failure::Lib(
                Error::InvalidArgument(_)
                | Error::NonPositiveCoefficient { .. }
                | Error::NonFiniteCoefficient { .. }
                | Error::UnsupportedMeasure(_)
                | Error::BranchAmbiguity { .. },
            )
            | Failure::Config(_) => EXIT_CONFIG,
            _ => EXIT_FAILURE,
        }
    }

    fn to_json(&self) -> serde_json::Value {
        match self {
            Failure::Lib(e) => {
                let mut v = json!({ "error": error_kind(e), "message": e.to_string() });
                if let Error::Breakdown { shift, pivot } = e {
                    v["shift"] = json!(shift);
                    v["pivot"] = json!(pivot);
                }
                v
            }
            Failure::Config(m) => json!({ "error": "invalid_config", "message": m }),
            Failure::Io(e) => json!({ "error": "io", "message": e.to_string() }),
        }
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::NonPositiveCoefficient { .. } => "non_positive_coefficient",
        Error::NonFiniteCoefficient { .. } => "non_finite_coefficient",
        Error::InvalidArgument(_) => "invalid_argument",
        Error::Breakdown { .. } => "breakdown",
        Error::IterationLimit { .. } => "iteration_limit",
        Error::NotJacobi { .. } => "not_jacobi",
        Error::NotSignSymmetric { .. } => "not_sign_symmetric",
        Error::SingularHankel { .. } => "singular_hankel",
        Error::BranchAmbiguity { .. } => "branch_ambiguity",
        Error::UnsupportedMeasure(_) => "unsupported_measure",
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Parses `argv` (program name first) and runs the subcommand.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{}", e.render());
                return EXIT_OK;
            }
            let f = Failure::Config(e.render().to_string().trim().to_string());
            let _ = writeln!(err, "{}", f.to_json());
            return f.exit_code();
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "{}", f.to_json());
            f.exit_code()
        }
    }
}

pub fn run() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

fn load_measure(sel: &str) -> std::result::Result<MeasureSpec, Failure> {
    if sel.eq_ignore_ascii_case("chebyshev") {
        return Ok(chebyshev_measure());
    }
    let text = fs::read_to_string(sel)
        .map_err(|e| Failure::Config(format!("cannot read measure `{sel}`: {e}")))?;
    Ok(MeasureSpec::from_json(&text)?)
}

fn resolve_shifts(s: &ShiftArgs) -> std::result::Result<Vec<f64>, Failure> {
    match (s.alpha, s.shifts.is_empty()) {
        (Some(_), false) => Err(Failure::Config(
            "give either --alpha or --shift, not both".into(),
        )),
        (None, true) => Err(Failure::Config(
            "a shift is required (--shift or --alpha)".into(),
        )),
        (Some(a), true) => {
            if !(a > 0.0 && a < 1.0) {
                return Err(Failure::Config(format!(
                    "--alpha must lie in (0, 1), got {a}"
                )));
            }
            Ok(vec![cospi(a)])
        }
        (None, false) => Ok(s.shifts.clone()),
    }
}

fn single_shift(s: &ShiftArgs) -> std::result::Result<f64, Failure> {
    let v = resolve_shifts(s)?;
    if v.len() != 1 {
        return Err(Failure::Config(
            "this subcommand takes exactly one shift".into(),
        ));
    }
    Ok(v[0])
}

/// Orders from `1,5,10..20` (ranges inclusive; `a:b` also accepted).
pub fn parse_n_list(s: &str) -> std::result::Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let range = part.split_once("..").or_else(|| part.split_once(':'));
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|e| format!("bad order `{t}`: {e}"))
        };
        match range {
            Some((a, b)) => {
                let (a, b) = (parse(a)?, parse(b)?);
                if a > b {
                    return Err(format!("empty range `{part}`"));
                }
                out.extend(a..=b);
            }
            None => out.push(parse(part)?),
        }
    }
    if out.is_empty() || out.contains(&0) {
        return Err("order list must be non-empty with positive entries".into());
    }
    Ok(out)
}

/// `re` or `re,im`.
pub fn parse_probe(s: &str) -> std::result::Result<Complex64, String> {
    let bad = |e: std::num::ParseFloatError| format!("bad probe `{s}`: {e}");
    match s.split_once(',') {
        Some((re, im)) => Ok(Complex64::new(
            re.trim().parse().map_err(bad)?,
            im.trim().parse().map_err(bad)?,
        )),
        None => Ok(Complex64::new(s.trim().parse().map_err(bad)?, 0.0)),
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Writes to `<prefix><suffix>` when a prefix is given (and reports the path
/// on `out`), otherwise to `out`.
fn emit(out: &mut dyn Write, prefix: Option<&Path>, suffix: &str, bytes: &[u8]) -> Outcome {
    match prefix {
        Some(p) => {
            let path = with_suffix(p, suffix);
            fs::write(&path, bytes)?;
            writeln!(out, "{}", path.display())?;
        }
        None => out.write_all(bytes)?,
    }
    Ok(())
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Outcome {
    match cmd {
        Command::Transform {
            measure,
            shift,
            n,
            precision,
            output,
        } => {
            let m = load_measure(&measure.measure)?;
            let x = single_shift(&shift)?;
            let bytes = transform_csv(&m, x, n, precision.unwrap_or_default())?;
            emit(out, output.as_deref(), ".csv", &bytes)
        }
        Command::Spectrum {
            measure,
            shift,
            n_list,
            output,
        } => {
            let s =
                SignedMeasureSpec::new(load_measure(&measure.measure)?, resolve_shifts(&shift)?)?;
            let ns = parse_n_list(&n_list).map_err(Failure::Config)?;
            let sweep = spectral::pole_sweep(&s, &ns);
            let mut bytes = serde_json::to_vec_pretty(&sweep.to_json()).expect("sweep serializes");
            bytes.push(b'\n');
            emit(out, output.as_deref(), ".json", &bytes)?;
            match (sweep.reports.is_empty(), sweep.skipped.first()) {
                (true, Some(first)) => Err(first.error.clone().into()),
                _ => Ok(()),
            }
        }
        Command::Pade {
            measure,
            shift,
            n_list,
            probes,
            tol,
            output,
        } => {
            let s =
                SignedMeasureSpec::new(load_measure(&measure.measure)?, resolve_shifts(&shift)?)?;
            let ns = parse_n_list(&n_list).map_err(Failure::Config)?;
            let probes = if probes.is_empty() {
                vec![Complex64::new(2.0, 0.0), Complex64::new(0.0, 2.0)]
            } else {
                probes
                    .iter()
                    .map(|p| parse_probe(p))
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(Failure::Config)?
            };
            let mut approximants = Vec::new();
            let mut first_err = None;
            for &n in &ns {
                match pade::diagonal_pade(&s, n) {
                    Ok(p) => approximants.push(p),
                    Err(e) if e.is_breakdown() || matches!(e, Error::NotSignSymmetric { .. }) => {
                        first_err.get_or_insert(e);
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            if approximants.is_empty() {
                return Err(first_err.expect("non-empty order list").into());
            }
            let rows = pade::approximation_error(&s, &ns, &probes)?;
            let mut poles = Vec::new();
            pade::write_poles_csv(&mut poles, &approximants, tol)?;
            let mut errors = Vec::new();
            pade::write_errors_csv(&mut errors, &rows)?;
            emit(out, Some(&output), "_poles.csv", &poles)?;
            emit(out, Some(&output), "_errors.csv", &errors)
        }
        Command::Diagnose {
            measure,
            shift,
            big_n,
            seed,
            bound_threshold,
            precision,
            output,
        } => {
            let m = load_measure(&measure.measure)?;
            let x = single_shift(&shift)?;
            let opts = VerdictOptions {
                bound_threshold,
                seed,
                precision,
            };
            let report = diagnostics::verdict_with(&m, x, big_n, &opts)?;
            let mut bytes = report.to_json().into_bytes();
            bytes.push(b'\n');
            emit(out, output.as_deref(), ".json", &bytes)
        }
        Command::Quad { measure, n, output } => {
            let m = load_measure(&measure.measure)?;
            let rule = jacobi::gauss_quadrature(&m, n)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["k", "node", "weight"]).map_err(csv_io)?;
            for (k, (t, wt)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
                w.write_record([k.to_string(), t.to_string(), wt.to_string()])
                    .map_err(csv_io)?;
            }
            let bytes = w.into_inner().map_err(|e| Failure::Io(e.into_error()))?;
            emit(out, output.as_deref(), ".csv", &bytes)
        }
        Command::StahlDemo {
            big_n,
            n_max,
            seed,
            output,
        } => {
            let summary = stahl_demo(big_n, n_max, seed)?;
            let mut bytes = serde_json::to_vec_pretty(&summary).expect("summary serializes");
            bytes.push(b'\n');
            emit(out, output.as_deref(), "_summary.json", &bytes)
        }
    }
}

fn csv_io(e: csv::Error) -> Failure {
    Failure::Io(e.into())
}

/// `j,d_j,v_j,eps_j,diag,sup,sub,g`: pivots of `J - xI` next to the rows of
/// the exact `n x n` truncation of `J~`. The last row has no off-diagonal.
fn transform_csv(
    m: &MeasureSpec,
    x: f64,
    n: usize,
    precision: Precision,
) -> std::result::Result<Vec<u8>, Failure> {
    if n == 0 {
        return Err(Failure::Config("--n must be positive".into()));
    }
    let f = darboux::factorize_with(m, x, n, precision)?;
    let (a_last, _) = m.coeff(n - 1)?;
    let v_last = a_last / f.d[n - 1];
    let l = darboux::build_l(&f);
    let edge = v_last * l.diag[n - 1];
    let t = darboux::gltl_plus_x(&l, &f.eps, x, Some(edge));

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["j", "d_j", "v_j", "eps_j", "diag", "sup", "sub", "g"])
        .map_err(csv_io)?;
    for j in 0..n {
        let v = if j + 1 < n { f.v[j] } else { v_last };
        let (sup, sub) = if j + 1 < n {
            (t.sup[j].to_string(), t.sub[j].to_string())
        } else {
            (String::new(), String::new())
        };
        let eps = f.eps.as_slice()[j];
        w.write_record([
            j.to_string(),
            f.d[j].to_string(),
            v.to_string(),
            eps.to_string(),
            t.diag[j].to_string(),
            sup,
            sub,
            eps.to_string(),
        ])
        .map_err(csv_io)?;
    }
    w.into_inner().map_err(|e| Failure::Io(e.into_error()))
}

fn stahl_demo(
    big_n: usize,
    n_max: usize,
    seed: u64,
) -> std::result::Result<serde_json::Value, Failure> {
    if n_max == 0 {
        return Err(Failure::Config("--n-max must be positive".into()));
    }
    let alpha = (5f64.sqrt() - 1.0) / 2.0;
    let x = cospi(alpha);
    let cheb = chebyshev_measure();
    let opts = VerdictOptions {
        seed,
        ..VerdictOptions::default()
    };

    let stahl = diagnostics::verdict_with(&cheb, x, big_n, &opts)?;
    let ns: Vec<usize> = (1..=n_max).collect();
    let sweep = spectral::pole_sweep(&SignedMeasureSpec::new(cheb.clone(), vec![x])?, &ns);
    let far = sweep
        .reports
        .iter()
        .flat_map(|r| r.eigs.iter())
        .filter(|z| z.re.abs() > 2.0)
        .count();
    let carleman_ratio = match (
        stahl.carleman_sums.iter().find(|c| c.k == 100),
        stahl.carleman_sums.last(),
    ) {
        (Some(a), Some(b)) if a.sum > 0.0 => Some(b.sum / a.sum),
        _ => None,
    };

    let bounded_x = -1.5;
    let bounded = diagnostics::verdict_with(&cheb, bounded_x, big_n, &opts)?;
    let bounded_ns: Vec<usize> = (1..=n_max.min(100)).collect();
    let bsweep = spectral::pole_sweep(&SignedMeasureSpec::new(cheb, vec![bounded_x])?, &bounded_ns);

    Ok(json!({
        "schema": diagnostics::SCHEMA,
        "stahl": {
            "alpha": alpha,
            "x": x,
            "N": big_n,
            "sup_d": stahl.sup_d,
            "argmax_j": stahl.argmax_j,
            "growth": stahl.growth,
            "verdict": stahl.verdict,
            "carleman_ratio": carleman_ratio,
            "kronecker_min_cos": stahl.kronecker_min_cos,
            "n_max": n_max,
            "max_pole_abs": sweep.max_abs(),
            "poles_with_abs_re_gt_2": far,
            "outside_total": sweep.reports.iter().map(|r| r.outside_count).sum::<usize>(),
            "skipped_orders": sweep.skipped.iter().map(|s| s.n).collect::<Vec<_>>(),
        },
        "bounded": {
            "x": bounded_x,
            "N": big_n,
            "sup_d": bounded.sup_d,
            "growth": bounded.growth,
            "verdict": bounded.verdict,
            "n_max": bounded_ns.len(),
            "max_pole_abs": bsweep.max_abs(),
            "outside_total": bsweep.reports.iter().map(|r| r.outside_count).sum::<usize>(),
            "skipped_orders": bsweep.skipped.iter().map(|s| s.n).collect::<Vec<_>>(),
        },
    }))
}

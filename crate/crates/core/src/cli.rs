//! Command-line front end. `run` parses an argument vector, executes one
//! subcommand and returns the exit code with captured stdout and stderr, so
//! the binary and the tests share one path.

use std::collections::BTreeMap;
use std::fs;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};
use crate::group::{parse_group, AbelianGroup};
use crate::hp::DEFAULT_DIGITS;
use crate::invariants::{
    bbar_d, conjectured_pole_order, default_hook, nonvanishing_case, orbits, spectrum, GaloisActionSpec, WeightFn,
};
use crate::oracle::count::{count_surjections_with, CountOptions, Ordering};
use crate::rat::{self, Q};
use crate::series::{
    euler_product_truncated, nonvanishing_limit, residue_main_term, series_coefficients, sieve_to_surjective,
    zeta_factorization, ProductMode,
};
use crate::tauberian::{fit_exponent, saving_exponent, MainTerm, TauberianParams};
use crate::theta::{scan_cyclic, theta_for_group, theta_ram, ModelKind, SubconvexityModel};

pub const PRECISION_ENV: &str = "MALLE_LAB_PRECISION";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "malle-lab", version, about = "Invariants, θ bounds and Dirichlet series for abelian number field counts over Q")]
struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Index spectrum, a(G), b_d, b̄_d, conjectured pole orders and non-vanishing cases.
    Invariants {
        group: String,
        #[arg(long, default_value = "disc")]
        ordering: String,
        /// `full` (all units) or `units=u1,u2,...`.
        #[arg(long, default_value = "full")]
        action: String,
    },
    /// Best power-saving exponent θ.
    Theta {
        group: String,
        #[arg(long, default_value = "soehne")]
        model: ModelKind,
        #[arg(long = "degK", default_value_t = 1)]
        deg_k: u64,
        #[arg(long, default_value = "disc")]
        ordering: Ordering,
    },
    /// Scan composite n below --max for cyclic groups C_n.
    ScanCyclic {
        #[arg(long)]
        max: u64,
        #[arg(long)]
        out: Option<String>,
        #[arg(long, default_value = "soehne")]
        model: ModelKind,
    },
    /// Truncated Euler product of the generating series.
    Series {
        group: String,
        #[arg(long)]
        s: String,
        #[arg(long)]
        pmax: u64,
        /// Sieve to surjections.
        #[arg(long)]
        surjective: bool,
        /// `full` or `b` (zeta factors divided out).
        #[arg(long, default_value = "full")]
        mode: String,
        /// Also report the leading main-term coefficient.
        #[arg(long)]
        residue: bool,
        #[command(flatten)]
        precision: Precision,
    },
    /// Exact Dirichlet coefficients up to --max as CSV (n, count).
    Coeffs {
        group: String,
        #[arg(long)]
        max: u64,
        #[arg(long)]
        surjective: bool,
        #[arg(long)]
        out: Option<String>,
    },
    /// Brute-force surjection count by conductors of Dirichlet characters.
    /// Desk-scale budgets: C2 and C3 to X = 10^8, C4, C6 and C2xC2 to 10^6.
    Count {
        group: String,
        #[arg(long = "X")]
        x: u64,
        #[arg(long, default_value = "disc")]
        ordering: Ordering,
        /// CSV of (invariant value, surjection count).
        #[arg(long)]
        histogram: Option<String>,
    },
    /// Limit of the sieved series at s = 1/d with the divided zeta factors removed.
    SieveCheck {
        group: String,
        #[arg(long)]
        d: u64,
        #[arg(long)]
        pmax: u64,
        #[command(flatten)]
        precision: Precision,
    },
    /// Tauberian parameter algebra and error-exponent fits.
    Tauberian {
        #[command(subcommand)]
        action: TauberianCommand,
    },
}

#[derive(Debug, Args)]
struct Precision {
    /// Significant digits (default from MALLE_LAB_PRECISION, else 50).
    #[arg(long)]
    digits: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum TauberianCommand {
    /// Error exponent and optimal T, y exponents.
    Exponent {
        #[arg(long)]
        sigma: String,
        #[arg(long)]
        delta: String,
        #[arg(long)]
        xi: String,
        #[arg(long)]
        k: u64,
    },
    /// Fit the exponent of N(X) − main term from a CSV of (X, N).
    Fit {
        #[arg(long)]
        counts: String,
        /// `c*X^e[*logX^m]`.
        #[arg(long)]
        main: String,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub arguments: Vec<String>,
    pub version: String,
    pub precision_digits: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_max: Option<u64>,
    pub jobs: usize,
    pub wall_time_s: f64,
    /// SHA-256 of the serialized result.
    pub output_checksum: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

struct Output {
    result: Value,
    p_max: Option<u64>,
    digits: usize,
}

fn default_digits() -> Result<usize> {
    match std::env::var(PRECISION_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&d| d >= 10)
            .ok_or_else(|| LabError::Invalid(format!("{PRECISION_ENV} must be an integer ≥ 10, got {v:?}"))),
        Err(_) => Ok(DEFAULT_DIGITS),
    }
}

fn digits_of(p: &Precision) -> Result<usize> {
    match p.digits {
        Some(d) if d < 10 => Err(LabError::Invalid("--digits must be at least 10".into())),
        Some(d) => Ok(d),
        None => default_digits(),
    }
}

fn group_arg(lit: &str) -> Result<AbelianGroup> {
    let g = parse_group(lit)?;
    if g.is_trivial() {
        return Err(LabError::Invalid(format!("{lit} is the trivial group")));
    }
    Ok(g)
}

fn rational_arg(name: &str, s: &str) -> Result<Q> {
    rat::parse(s).ok_or_else(|| LabError::Invalid(format!("--{name} expects a rational a/b, got {s:?}")))
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

fn write_csv<R: Serialize>(path: &str, header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<()> {
    let io = |e: csv::Error| LabError::Invalid(format!("cannot write {path}: {e}"));
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    w.flush().map_err(|e| LabError::Invalid(format!("cannot write {path}: {e}")))
}

fn csv_string<R: Serialize>(header: &[&str], rows: impl IntoIterator<Item = R>) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8")
}

fn invariants_cmd(group: &str, ordering: &str, action: &str) -> Result<Value> {
    let g = group_arg(group)?;
    let wt = match ordering {
        "disc" => WeightFn::Disc,
        "ram" => WeightFn::Ram,
        other => return Err(LabError::Invalid(format!("unknown ordering {other:?}"))),
    };
    let act = if action == "full" {
        GaloisActionSpec::cyclotomic(&g)?
    } else if let Some(list) = action.strip_prefix("units=") {
        let units = list
            .split(',')
            .map(|u| u.trim().parse::<u64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| LabError::Invalid(format!("malformed unit list {list:?}")))?;
        GaloisActionSpec::units(&g, &units)?
    } else {
        return Err(LabError::Invalid(format!("unknown action {action:?}")));
    };
    let orbs = orbits(&g, &act, &wt)?;
    let spec = spectrum(&orbs);
    let mut b = BTreeMap::new();
    for d in &spec {
        b.insert(rat::fmt(d), orbs.iter().filter(|o| !o.is_identity() && &o.index == d).count());
    }
    let mut per_d = Vec::new();
    // b̄_d, conjectured orders and cases concern the discriminant weight over Q.
    if wt == WeightFn::Disc && action == "full" {
        for d in spec.iter().filter(|d| d.is_integer()) {
            let d = d.to_integer().try_into().expect("positive index");
            per_d.push(json!({
                "d": d,
                "bbar_d": bbar_d(&g, d, &default_hook)?,
                "conjectured_pole_order": conjectured_pole_order(&g, d, &default_hook)?,
                "case": nonvanishing_case(&g, d)?.label(),
            }));
        }
    }
    Ok(json!({
        "group": g.to_string(),
        "order": g.order(),
        "ordering": ordering,
        "orbits": to_value(&orbs.iter().filter(|o| !o.is_identity()).collect::<Vec<_>>()),
        "spectrum": spec.iter().map(rat::fmt).collect::<Vec<_>>(),
        "a": rat::fmt(&spec[0]),
        "b": b,
        "poles": per_d,
    }))
}

fn theta_cmd(group: &str, model: ModelKind, deg_k: u64, ordering: Ordering) -> Result<Value> {
    let g = group_arg(group)?;
    if model == ModelKind::Custom {
        return Err(LabError::Invalid("custom models are library-only".into()));
    }
    let m = SubconvexityModel::preset(model, deg_k);
    let wt = match ordering {
        Ordering::Disc => WeightFn::Disc,
        Ordering::Ram => WeightFn::Ram,
    };
    let res = theta_for_group(&g, &wt, &m)?;
    let mut v = to_value(&res);
    v["group"] = json!(g.to_string());
    v["ordering"] = to_value(&ordering);
    if ordering == Ordering::Ram && model == ModelKind::Soehne {
        v["ram_closed_form"] = json!(rat::fmt(&theta_ram(&g, deg_k)?));
    }
    Ok(v)
}

fn scan_cmd(max: u64, out: Option<&str>, model: ModelKind) -> Result<Value> {
    let report = scan_cyclic(max, &SubconvexityModel::preset(model, 1))?;
    if let Some(path) = out {
        #[derive(Serialize)]
        struct Row<'a> {
            n: u64,
            a: u64,
            d2: u64,
            theta: String,
            flag_i: bool,
            flag_ii: bool,
            case: &'a str,
        }
        write_csv(
            path,
            &["n", "a", "d2", "theta", "flag_i", "flag_ii", "case"],
            report.rows.iter().map(|r| Row {
                n: r.n,
                a: r.a,
                d2: r.d2,
                theta: rat::fmt(&r.theta),
                flag_i: r.flag_i,
                flag_ii: r.flag_ii,
                case: r.case.label(),
            }),
        )?;
    }
    Ok(json!({
        "n_max": report.n_max,
        "model": to_value(&model),
        "composite_count": report.composite_count,
        "count_i": report.count_i,
        "count_ii": report.count_ii,
        "fraction_i": report.fraction_i,
        "fraction_ii": report.fraction_ii,
        "csv": out,
    }))
}

#[allow(clippy::too_many_arguments)]
fn series_cmd(group: &str, s: &str, pmax: u64, surjective: bool, mode: &str, residue: bool, digits: usize) -> Result<Value> {
    let g = group_arg(group)?;
    let s = rational_arg("s", s)?;
    let mode = match mode {
        "full" => ProductMode::Full,
        "b" | "B" => ProductMode::B,
        other => return Err(LabError::Invalid(format!("unknown mode {other:?}"))),
    };
    let mut v = if surjective {
        if mode == ProductMode::B {
            return Err(LabError::Invalid("--surjective uses the full product".into()));
        }
        to_value(&sieve_to_surjective(&g, &s, pmax, digits)?)
    } else {
        to_value(&euler_product_truncated(&g, &s, pmax, mode, digits)?)
    };
    v["mode"] = to_value(&mode);
    v["surjective"] = json!(surjective);
    v["factorization"] = to_value(&zeta_factorization(&g)?);
    if residue {
        v["residue"] = to_value(&residue_main_term(&g, pmax, digits)?);
    }
    Ok(v)
}

fn coeffs_cmd(group: &str, max: u64, surjective: bool, out: Option<&str>) -> Result<(Value, Option<String>)> {
    let g = group_arg(group)?;
    let rows = series_coefficients(&g, max, surjective)?;
    match out {
        Some(path) => {
            write_csv(path, &["n", "count"], rows.iter())?;
            Ok((json!({"group": g.to_string(), "max": max, "surjective": surjective, "nonzero": rows.len(), "csv": path}), None))
        }
        None => Ok((Value::Null, Some(csv_string(&["n", "count"], rows.iter())))),
    }
}

fn count_cmd(group: &str, x: u64, ordering: Ordering, histogram: Option<&str>) -> Result<Value> {
    let g = group_arg(group)?;
    let opts = CountOptions { histogram: histogram.is_some(), ..CountOptions::default() };
    let report = count_surjections_with(&g, x, ordering, opts)?;
    if let Some(path) = histogram {
        write_csv(path, &["value", "surjections"], report.histogram.iter())?;
    }
    let mut v = to_value(&report);
    if let Some(obj) = v.as_object_mut() {
        obj.remove("histogram");
    }
    v["histogram_csv"] = json!(histogram);
    Ok(v)
}

fn sieve_check_cmd(group: &str, d: u64, pmax: u64, digits: usize) -> Result<Value> {
    let g = group_arg(group)?;
    Ok(to_value(&nonvanishing_limit(&g, d, pmax, digits)?))
}

fn read_counts(path: &str) -> Result<Vec<(f64, f64)>> {
    let text = fs::read_to_string(path).map_err(|e| LabError::Invalid(format!("cannot read {path}: {e}")))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| LabError::Invalid(format!("{path}: {e}")))?;
        let parse = |j: usize| rec.get(j).and_then(|s| s.parse::<f64>().ok());
        match (parse(0), parse(1)) {
            (Some(x), Some(n)) => out.push((x, n)),
            // A header line is tolerated.
            _ if i == 0 => {}
            _ => return Err(LabError::Invalid(format!("{path}: malformed row {}", i + 1))),
        }
    }
    Ok(out)
}

fn tauberian_cmd(cmd: &TauberianCommand) -> Result<Value> {
    match cmd {
        TauberianCommand::Exponent { sigma, delta, xi, k } => {
            let params = TauberianParams {
                sigma_a: rational_arg("sigma", sigma)?,
                delta: rational_arg("delta", delta)?,
                xi: rational_arg("xi", xi)?,
                k: *k,
            };
            let e = saving_exponent(&params)?;
            Ok(json!({"params": to_value(&params), "result": to_value(&e)}))
        }
        TauberianCommand::Fit { counts, main } => {
            let m: MainTerm = main.parse()?;
            let pts = read_counts(counts)?;
            let fit = fit_exponent(&pts, |x| m.eval(x))?;
            let finite = |x: f64| if x.is_finite() { json!(x) } else { json!(x.to_string()) };
            Ok(json!({
                "main_term": to_value(&m),
                "points": pts.len(),
                "points_used": fit.points_used,
                "exponent": finite(fit.exponent),
                "ci": [finite(fit.ci.0), finite(fit.ci.1)],
                "sentinel": fit.is_sentinel(),
            }))
        }
    }
}

/// Either a JSON result or raw CSV for stdout.
fn dispatch(cmd: &Command) -> Result<(Output, Option<String>)> {
    let plain = |result| Output { result, p_max: None, digits: DEFAULT_DIGITS };
    Ok(match cmd {
        Command::Invariants { group, ordering, action } => (plain(invariants_cmd(group, ordering, action)?), None),
        Command::Theta { group, model, deg_k, ordering } => (plain(theta_cmd(group, *model, *deg_k, *ordering)?), None),
        Command::ScanCyclic { max, out, model } => (plain(scan_cmd(*max, out.as_deref(), *model)?), None),
        Command::Series { group, s, pmax, surjective, mode, residue, precision } => {
            let digits = digits_of(precision)?;
            let result = series_cmd(group, s, *pmax, *surjective, mode, *residue, digits)?;
            (Output { result, p_max: Some(*pmax), digits }, None)
        }
        Command::Coeffs { group, max, surjective, out } => {
            let (v, csv) = coeffs_cmd(group, *max, *surjective, out.as_deref())?;
            (plain(v), csv)
        }
        Command::Count { group, x, ordering, histogram } => {
            (plain(count_cmd(group, *x, *ordering, histogram.as_deref())?), None)
        }
        Command::SieveCheck { group, d, pmax, precision } => {
            let digits = digits_of(precision)?;
            let result = sieve_check_cmd(group, *d, *pmax, digits)?;
            (Output { result, p_max: Some(*pmax), digits }, None)
        }
        Command::Tauberian { action } => (plain(tauberian_cmd(action)?), None),
    })
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Invariants { .. } => "invariants",
        Command::Theta { .. } => "theta",
        Command::ScanCyclic { .. } => "scan-cyclic",
        Command::Series { .. } => "series",
        Command::Coeffs { .. } => "coeffs",
        Command::Count { .. } => "count",
        Command::SieveCheck { .. } => "sieve-check",
        Command::Tauberian { .. } => "tauberian",
    }
}

fn exit_code(e: &LabError) -> i32 {
    match e {
        LabError::Invalid(_) | LabError::Unsupported(_) => EXIT_USAGE,
        LabError::Budget(_) => EXIT_BUDGET,
        LabError::Contract(_) => EXIT_FAILURE,
    }
}

/// Parse `argv` (program name first) and execute.
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    Outcome { code: EXIT_OK, stdout: text, stderr: String::new() }
                }
                _ => Outcome { code: EXIT_USAGE, stdout: String::new(), stderr: text },
            };
        }
    };
    let jobs = cli.jobs.unwrap_or_else(rayon::current_num_threads);
    if jobs == 0 {
        return Outcome { code: EXIT_USAGE, stdout: String::new(), stderr: "error: --jobs must be positive\n".into() };
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(p) => p,
        Err(e) => return Outcome { code: EXIT_FAILURE, stdout: String::new(), stderr: format!("error: {e}\n") },
    };
    let start = Instant::now();
    match pool.install(|| dispatch(&cli.command)) {
        Err(e) => Outcome { code: exit_code(&e), stdout: String::new(), stderr: format!("error: {e}\n") },
        Ok((_, Some(csv))) => Outcome { code: EXIT_OK, stdout: csv, stderr: String::new() },
        Ok((out, None)) => {
            let body = serde_json::to_string(&out.result).expect("serializable");
            let manifest = RunManifest {
                command: command_name(&cli.command).to_string(),
                arguments: argv[1..].to_vec(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                precision_digits: out.digits,
                p_max: out.p_max,
                jobs,
                wall_time_s: start.elapsed().as_secs_f64(),
                output_checksum: Sha256::digest(body.as_bytes()).iter().map(|b| format!("{b:02x}")).collect(),
            };
            let doc = json!({"result": out.result, "manifest": to_value(&manifest)});
            Outcome {
                code: EXIT_OK,
                stdout: serde_json::to_string_pretty(&doc).expect("serializable") + "\n",
                stderr: String::new(),
            }
        }
    }
}

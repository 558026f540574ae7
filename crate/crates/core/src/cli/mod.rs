//! Command-line front end.
//!
//! Exit codes: 0 success; 1 usage or input error; 2 infeasible problem or
//! rejected certificate; 3 numerical trouble in the solver.

mod format;
mod problem_file;

pub use format::sig9;
pub use problem_file::{read_problem, HorizonFile, ProblemFile, SetFile};

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::bounds::{build_sdp, compute_bound, iterative_tighten, BoundOptions, BoundResult};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::localization::{audit_containment, compute_r_eps, compute_s_delta, write_csv, write_rle, LevelSetGrid};
use crate::polynomial::{parse, Polynomial};
use crate::sdp::{write_sparse, SolverStatus};
use crate::soscert::MultiplierDegree;
use crate::system::{builtin_problem, BuiltinParams, Horizon, InitialKind, ProblemSpec};
use crate::trajectories::{check_certificate, integrate, lower_bound, LowerBoundOptions, PolynomialAux};

#[derive(Parser, Debug)]
#[command(name = "auxbound", version, about = "Bounds on extreme values along trajectories of polynomial ODEs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute SOS upper bounds.
    Bound(BoundArgs),
    /// Search initial conditions for a lower bound.
    Lower(LowerArgs),
    /// Export the localization sets S_delta and R_eps on a grid.
    Localize(LocalizeArgs),
    /// Check an auxiliary function on a grid.
    Check(CheckArgs),
    /// Print a problem as a JSON problem file.
    Problem(ProblemArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Source {
    /// JSON problem file.
    #[arg(long, conflicts_with = "builtin")]
    pub problem: Option<PathBuf>,
    /// Builtin problem name.
    #[arg(long)]
    pub builtin: Option<String>,
    /// Builtin initial set: `point`, `circle`, or a number for `quadratic1d`.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    /// Horizon end `T`, or `inf`.
    #[arg(long)]
    pub horizon: Option<String>,
    /// Number of modes for `burgers`.
    #[arg(long)]
    pub modes: Option<usize>,
    /// Initial level for `burgers`.
    #[arg(long)]
    pub phi0: Option<f64>,
    /// Add (true) or drop (false) a builtin's a-priori domain constraint.
    #[arg(long)]
    pub local: Option<bool>,
}

impl Source {
    pub fn load(&self) -> Result<ProblemSpec> {
        let horizon = self.horizon.as_deref().map(parse_horizon).transpose()?;
        match (&self.problem, &self.builtin) {
            (Some(path), None) => {
                let spec = read_problem(path)?;
                Ok(match horizon {
                    Some(Some(t)) => spec.clone().with_horizon(Horizon::finite(spec.horizon().t0(), t)?),
                    Some(None) => spec.clone().with_horizon(Horizon::infinite(spec.horizon().t0())),
                    None => spec,
                })
            }
            (None, Some(name)) => {
                let mut params = BuiltinParams {
                    modes: self.modes,
                    phi0: self.phi0,
                    local: self.local,
                    t_end: horizon.map(|h| h.unwrap_or(f64::INFINITY)),
                    ..Default::default()
                };
                match self.x0.as_deref() {
                    None => {}
                    Some("point") => params.initial = Some(InitialKind::Point),
                    Some("circle") => params.initial = Some(InitialKind::Circle),
                    Some(v) => {
                        params.x0 = Some(v.parse().map_err(|_| usage(format!("bad --x0 `{v}`")))?);
                    }
                }
                builtin_problem(name, &params)
            }
            _ => Err(usage("give exactly one of --problem or --builtin")),
        }
    }
}

fn parse_horizon(s: &str) -> Result<Option<f64>> {
    match s {
        "inf" | "infinite" | "Inf" => Ok(None),
        _ => s
            .parse::<f64>()
            .map(Some)
            .map_err(|_| usage(format!("bad --horizon `{s}`"))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Multipliers {
    Maximal,
    MatchV,
}

#[derive(Args, Debug)]
pub struct BoundArgs {
    #[command(flatten)]
    pub source: Source,
    /// Degree of V; a comma-separated list runs a sweep.
    #[arg(long, value_delimiter = ',', required = true)]
    pub degree: Vec<u32>,
    #[arg(long)]
    pub time_independent: bool,
    /// Iterative tightening: up to N solves with Ω cut by {Φ ≤ previous bound}.
    #[arg(long, value_name = "N")]
    pub iterate: Option<usize>,
    /// Bound Φ + ∫Ψ dt using the problem's integrand.
    #[arg(long)]
    pub integral: bool,
    /// Bound Φ at the final time only.
    #[arg(long)]
    pub terminal_time: bool,
    #[arg(long, default_value_t = 1e-8)]
    pub gap_tol: f64,
    #[arg(long, value_enum, default_value_t = Multipliers::Maximal)]
    pub multipliers: Multipliers,
    /// Solve in rescaled states `y = c x`.
    #[arg(long)]
    pub state_scale: Option<f64>,
    /// Write results here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    /// Write the last computed V as polynomial text.
    #[arg(long)]
    pub v_out: Option<PathBuf>,
    /// Write the assembled SDP in sparse text form. With several degrees the
    /// file name gets a `_d<degree>` suffix.
    #[arg(long)]
    pub sdp_dump: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct LowerArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, default_value_t = 16)]
    pub starts: usize,
    /// Integration window (initial window for infinite horizons).
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Objective evaluations per local search.
    #[arg(long, default_value_t = 400)]
    pub budget: usize,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    /// Write the best trajectory as CSV (`t,<states>,phi`).
    #[arg(long)]
    pub trajectory_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct LocalizeArgs {
    #[command(flatten)]
    pub source: Source,
    /// V as polynomial text, or a JSON object with `v` (and optionally `lambda`).
    #[arg(long)]
    pub v_file: PathBuf,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Box `lo:hi,...` over `t,x` or over `x` only.
    #[arg(long = "box", allow_hyphen_values = true)]
    pub bbox: String,
    /// Resolutions `n,...`, or one value for every axis.
    #[arg(long, default_value = "101")]
    pub res: String,
    /// Output path prefix; writes `<prefix>_s`, `<prefix>_r` and `<prefix>_sr`.
    #[arg(long, default_value = "localize")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = GridFormat::Csv)]
    pub format: GridFormat,
    /// Audit the trajectory from this initial state (comma-separated) against both sets.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub audit_x0: Option<Vec<f64>>,
    /// Integration end for the audit.
    #[arg(long)]
    pub audit_t_end: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GridFormat {
    Csv,
    Rle,
    Both,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long)]
    pub v_file: PathBuf,
    /// Box `lo:hi,...` over `t,x` or over `x` only. Defaults to `[-1,1]` per
    /// state and `[t0, min(T, t0 + 1)]` in time.
    #[arg(long = "box", allow_hyphen_values = true)]
    pub bbox: Option<String>,
    #[arg(long, default_value = "21")]
    pub res: String,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
}

#[derive(Args, Debug)]
pub struct ProblemArgs {
    #[command(flatten)]
    pub source: Source,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli, &mut std::io::stdout().lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Bound(a) => bound(a, out),
        Command::Lower(a) => lower(a, out),
        Command::Localize(a) => localize(a, out),
        Command::Check(a) => check(a, out),
        Command::Problem(a) => {
            let spec = a.source.load()?;
            writeln!(out, "{}", ProblemFile::from_spec(&spec).to_json()?)?;
            Ok(0)
        }
    }
}

fn status_code(status: SolverStatus) -> i32 {
    match status {
        SolverStatus::Optimal => 0,
        SolverStatus::PrimalInfeasible | SolverStatus::DualInfeasible => 2,
        SolverStatus::SlowProgress | SolverStatus::IterationLimit => 3,
    }
}

fn bound(a: &BoundArgs, out: &mut dyn Write) -> Result<i32> {
    let mut spec = a.source.load()?;
    if a.integral {
        spec = spec.augment_integral()?;
    }
    if a.iterate.is_some() && a.degree.len() > 1 {
        return Err(usage("--iterate takes a single --degree"));
    }
    let mut rows: Vec<(usize, BoundResult)> = Vec::new();
    for &d in &a.degree {
        let mut opts = BoundOptions::new(d)
            .time_independent(a.time_independent)
            .terminal_time(a.terminal_time)
            .gap_tol(a.gap_tol);
        opts.state_scale = a.state_scale;
        opts.formulation.multipliers = match a.multipliers {
            Multipliers::Maximal => MultiplierDegree::Maximal,
            Multipliers::MatchV => MultiplierDegree::MatchV,
        };
        if let Some(path) = &a.sdp_dump {
            let path = if a.degree.len() > 1 { dump_path(path, d) } else { path.clone() };
            write_sparse(&build_sdp(&spec, &opts)?.sdp, BufWriter::new(File::create(path)?))?;
        }
        match a.iterate {
            Some(n) => {
                for (i, r) in iterative_tighten(&spec, &opts, n, 0.0)?.into_iter().enumerate() {
                    rows.push((i + 1, r));
                }
            }
            None => rows.push((1, compute_bound(&spec, &opts)?)),
        }
    }

    let mut buf: Vec<u8> = Vec::new();
    match a.format {
        OutputFormat::Csv => {
            writeln!(
                buf,
                "problem,degree,iteration,status,lambda,primal_objective,dual_objective,relative_gap,max_identity_residual,iterations,seconds"
            )?;
            for (it, r) in &rows {
                writeln!(
                    buf,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    spec.name(),
                    r.degree,
                    it,
                    r.status,
                    sig9(r.lambda),
                    sig9(r.primal_objective),
                    sig9(r.dual_objective),
                    sig9(r.relative_gap),
                    sig9(r.certificate.max_identity_residual()),
                    r.iterations,
                    sig9(r.seconds)
                )?;
            }
        }
        OutputFormat::Json => {
            let list: Vec<Value> = rows
                .iter()
                .map(|(it, r)| {
                    json!({
                        "problem": spec.name(),
                        "degree": r.degree,
                        "iteration": it,
                        "status": r.status.as_str(),
                        "lambda": round9(r.lambda),
                        "primal_objective": round9(r.primal_objective),
                        "dual_objective": round9(r.dual_objective),
                        "relative_gap": round9(r.relative_gap),
                        "max_identity_residual": round9(r.certificate.max_identity_residual()),
                        "iterations": r.iterations,
                        "seconds": round9(r.seconds),
                        "v": r.v.to_string(),
                    })
                })
                .collect();
            writeln!(buf, "{}", serde_json::to_string_pretty(&list)?)?;
        }
    }
    emit(&buf, a.out.as_deref(), out)?;
    if let (Some(path), Some((_, r))) = (&a.v_out, rows.last()) {
        std::fs::write(path, format!("{}\n", r.v))?;
    }
    Ok(rows.iter().map(|(_, r)| status_code(r.status)).max().unwrap_or(0))
}

fn dump_path(path: &Path, degree: u32) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_d{degree}.{}", ext.to_string_lossy()),
        None => format!("{stem}_d{degree}"),
    };
    path.with_file_name(name)
}

fn emit(buf: &[u8], path: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, buf)?,
        None => out.write_all(buf)?,
    }
    Ok(())
}

fn round9(x: f64) -> f64 {
    sig9(x).parse().unwrap_or(x)
}

fn lower(a: &LowerArgs, out: &mut dyn Write) -> Result<i32> {
    let spec = a.source.load()?;
    let opts = LowerBoundOptions {
        starts: a.starts,
        local_budget: a.budget,
        t_end: a.t_end,
        seed: a.seed,
        ..Default::default()
    };
    let r = lower_bound(&spec, &opts)?;
    let x0: Vec<String> = r.x0.iter().map(|v| sig9(*v)).collect();
    match a.format {
        OutputFormat::Csv => {
            writeln!(out, "problem,value,time,x0,evaluations,failures")?;
            writeln!(
                out,
                "{},{},{},{},{},{}",
                spec.name(),
                sig9(r.value),
                sig9(r.time),
                x0.join(" "),
                r.evaluations,
                r.failures
            )?;
        }
        OutputFormat::Json => {
            let v = json!({
                "problem": spec.name(),
                "value": round9(r.value),
                "time": round9(r.time),
                "x0": r.x0.iter().map(|v| round9(*v)).collect::<Vec<_>>(),
                "evaluations": r.evaluations,
                "failures": r.failures,
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?;
        }
    }
    if let Some(path) = &a.trajectory_out {
        let end = match spec.horizon() {
            Horizon::Finite { t_end, .. } => a.t_end.unwrap_or(t_end),
            Horizon::Infinite { t0 } => t0 + a.t_end.unwrap_or(2.0 * (r.time - t0).max(1.0)),
        };
        let tr = integrate(&spec, &r.x0, end, &opts.integrate)?;
        tr.write_csv(&spec, None, BufWriter::new(File::create(path)?))?;
    }
    Ok(0)
}

/// Reads V from polynomial text or from a JSON object with a `v` field,
/// returning the optional `lambda` stored alongside.
fn read_v(path: &Path, spec: &ProblemSpec) -> Result<(Polynomial, Option<f64>)> {
    let text = std::fs::read_to_string(path)?;
    let trimmed = text.trim();
    if trimmed.starts_with('{') || trimmed.starts_with('[') {
        let mut value: Value = serde_json::from_str(trimmed)?;
        if let Value::Array(list) = value {
            value = list
                .into_iter()
                .last()
                .ok_or_else(|| Error::InvalidProblem("empty result list in V file".into()))?;
        }
        let v = value
            .get("v")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::InvalidProblem("V file has no string field `v`".into()))?;
        Ok((parse(v, spec.vars())?, value.get("lambda").and_then(Value::as_f64)))
    } else {
        Ok((parse(trimmed, spec.vars())?, None))
    }
}

fn localize(a: &LocalizeArgs, out: &mut dyn Write) -> Result<i32> {
    let spec = a.source.load()?;
    let (v, stored_lambda) = read_v(&a.v_file, &spec)?;
    if a.delta.is_none() && a.eps.is_none() {
        return Err(usage("give --delta (with --lambda) and/or --eps"));
    }
    let lambda = a.lambda.or(stored_lambda);
    if a.delta.is_some() && lambda.is_none() {
        return Err(usage("--delta needs --lambda"));
    }
    let audit = match &a.audit_x0 {
        Some(x0) => {
            let (Some(delta), Some(eps), Some(lambda)) = (a.delta, a.eps, lambda) else {
                return Err(usage("--audit-x0 needs --lambda, --delta and --eps"));
            };
            let end = a
                .audit_t_end
                .or(spec.horizon().t_end())
                .ok_or_else(|| usage("--audit-x0 on an infinite horizon needs --audit-t-end"))?;
            Some((x0, delta, eps, lambda, end))
        }
        None => None,
    };
    let grid = Grid::parse(&a.bbox, &a.res)?;
    let aux = PolynomialAux::new(&v, &spec)?;
    let s = match a.delta {
        Some(delta) => Some(compute_s_delta(&aux, lambda.unwrap(), delta, &spec, &grid)?),
        None => None,
    };
    let r = match a.eps {
        Some(eps) => Some(compute_r_eps(&aux, eps, &spec, &grid)?),
        None => None,
    };
    let sr = match (&s, &r) {
        (Some(s), Some(r)) => Some(s.intersect(r)?),
        _ => None,
    };
    let mut summary = serde_json::Map::new();
    summary.insert("nodes".into(), json!(grid.len()));
    for (suffix, set) in [("s", &s), ("r", &r), ("sr", &sr)] {
        if let Some(set) = set {
            let files = write_grid(set, &a.out, suffix, a.format)?;
            summary.insert(
                suffix.into(),
                json!({ "members": set.count(), "files": files }),
            );
        }
    }
    if let Some((x0, delta, eps, lambda, end)) = audit {
        let tr = integrate(&spec, x0, end, &Default::default())?;
        let audit = audit_containment(&aux, lambda, delta, eps, &spec, &tr)?;
        summary.insert("audit".into(), serde_json::to_value(audit)?);
    }
    writeln!(out, "{}", serde_json::to_string_pretty(&Value::Object(summary))?)?;
    Ok(0)
}

fn write_grid(set: &LevelSetGrid, prefix: &Path, suffix: &str, format: GridFormat) -> Result<Vec<String>> {
    let mut files = Vec::new();
    let base = format!("{}_{suffix}", prefix.display());
    if matches!(format, GridFormat::Csv | GridFormat::Both) {
        let path = format!("{base}.csv");
        write_csv(set, BufWriter::new(File::create(&path)?))?;
        files.push(path);
    }
    if matches!(format, GridFormat::Rle | GridFormat::Both) {
        let path = format!("{base}.lsg");
        write_rle(set, BufWriter::new(File::create(&path)?))?;
        files.push(path);
    }
    Ok(files)
}

/// `[-1, 1]` per state and `[t0, min(T, t0 + 1)]` in time.
pub fn default_box(spec: &ProblemSpec) -> String {
    let t0 = spec.horizon().t0();
    let t1 = spec.horizon().t_end().map_or(t0 + 1.0, |t| t.min(t0 + 1.0));
    let mut parts = vec![format!("{t0}:{t1}")];
    parts.extend(std::iter::repeat_n("-1:1".to_string(), spec.nstate()));
    parts.join(",")
}

fn check(a: &CheckArgs, out: &mut dyn Write) -> Result<i32> {
    let spec = a.source.load()?;
    let (v, _) = read_v(&a.v_file, &spec)?;
    let bbox = a.bbox.clone().unwrap_or_else(|| default_box(&spec));
    let grid = Grid::parse(&bbox, &a.res)?;
    let report = check_certificate(&PolynomialAux::new(&v, &spec)?, &spec, &grid, a.tol)?;
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    Ok(if report.pass { 0 } else { 2 })
}

//! Command-line driver.
//!
//! Exit status of `check`: 0 invariant, 1 not-invariant, 2 unknown,
//! 3 usage, parse or configuration error, 4 internal error (including a
//! disagreement between LZZ and ES).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::rngs::StdRng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::abstraction::{abstraction, soundness_probe, AbstractionError, AbstractionGraph, EdgeKind};
use crate::falsify::{corroborate, sample_points, simulate_escape, trajectory, witness_start, write_trajectory_csv};
use crate::falsify::{EscapeReport, IntegratorConfig};
use crate::formula::Formula;
use crate::invariance::{Answer, CheckError, CheckOptions, Checker, Direction, QueryStats, Verdict, Witness};
use crate::lie::VectorField;
use crate::parse::{parse_formula, parse_polynomial, ParseError};
use crate::poly::{format_rational, Polynomial, Rational, VarContext};
use crate::qe::{model_point_f64, QeError, SmtBackend, DEFAULT_SOLVER, DEFAULT_TIMEOUT};

pub const EXIT_INVARIANT: i32 = 0;
pub const EXIT_NOT_INVARIANT: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_USAGE: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

pub const SOLVER_ENV: &str = "INVCHECK_SOLVER";
/// Overrides the location of the configuration file.
pub const CONFIG_ENV: &str = "INVCHECK_CONFIG";

#[derive(Debug, Parser)]
#[command(
    name = "invcheck",
    version,
    about = "Decide positive invariance of semi-algebraic sets under polynomial ODEs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide whether the candidate set of a problem file is positively invariant.
    Check(CheckArgs),
    /// Build the discrete abstraction over the sign cells of the problem's polynomials.
    Abstract(AbstractArgs),
    /// Print the droplet problem as a problem file.
    GenDroplet(GenDropletArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Lzz,
    Es,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Solver command line, e.g. "z3 -in".
    #[arg(long)]
    pub solver: Option<String>,
    /// Per-query timeout in seconds.
    #[arg(long, value_name = "SEC")]
    pub timeout: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Problem file (JSON).
    pub problem: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Both)]
    pub method: MethodArg,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Cross-check the verdict by numerical integration.
    #[arg(long)]
    pub falsify: bool,
    /// Split the ES exit formula into fine-grained chunks.
    #[arg(long)]
    pub fine: bool,
    /// Print detailed query statistics.
    #[arg(long)]
    pub stats: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Evaluate every branch of the emptiness recursion.
    #[arg(long)]
    pub strict: bool,
    /// Write the falsification trajectory as CSV.
    #[arg(long, value_name = "PATH")]
    pub trajectory_csv: Option<PathBuf>,
    /// Seed for the falsification samples.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct AbstractArgs {
    /// Problem file (JSON) with a `polys` list.
    pub problem: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Edge list output; defaults to the problem path with extension `edges`.
    #[arg(long, value_name = "PATH")]
    pub edges: Option<PathBuf>,
    /// DOT output; defaults to the problem path with extension `dot`.
    #[arg(long, value_name = "PATH")]
    pub dot: Option<PathBuf>,
    /// Run the numerical soundness probe on every absent edge.
    #[arg(long)]
    pub probe: bool,
    /// Print query statistics.
    #[arg(long)]
    pub stats: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Seed for the probe samples.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct GenDropletArgs {
    /// Write to a file instead of standard output.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub vars: Vec<String>,
    pub field: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polys: Option<Vec<String>>,
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub name: Option<String>,
    pub ctx: VarContext,
    pub field: VectorField,
    pub candidate: Option<Formula>,
    pub constraint: Option<Formula>,
    pub polys: Option<Vec<Polynomial>>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

fn diagnostic(what: &str, text: &str, e: &ParseError) -> CliError {
    let caret = format!("{}^", " ".repeat(e.column().saturating_sub(1)));
    CliError::Usage(format!("{what}: {e}\n  {text}\n  {caret}"))
}

impl From<QeError> for CliError {
    fn from(e: QeError) -> Self {
        match e {
            QeError::SolverNotFound(..) | QeError::EmptyCommand => CliError::Usage(e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<CheckError> for CliError {
    fn from(e: CheckError) -> Self {
        match e {
            CheckError::Qe(q) => q.into(),
            CheckError::TooManyChunks { .. } => CliError::Usage(e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<AbstractionError> for CliError {
    fn from(e: AbstractionError) -> Self {
        match e {
            AbstractionError::Qe(q) => q.into(),
            AbstractionError::Check(c) => c.into(),
            AbstractionError::NoPolynomials | AbstractionError::TooManyPolynomials(_) => CliError::Usage(e.to_string()),
            AbstractionError::UnknownCell(_) => CliError::Internal(e.to_string()),
        }
    }
}

impl ProblemFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn compile(&self) -> Result<Problem, CliError> {
        let ctx = VarContext::new(&self.vars).map_err(|e| CliError::Usage(format!("vars: {e}")))?;
        if self.field.len() != self.vars.len() {
            return Err(CliError::Usage(format!(
                "field has {} components but {} variables are declared",
                self.field.len(),
                self.vars.len()
            )));
        }
        let poly = |what: String, text: &str| parse_polynomial(text, &ctx).map_err(|e| diagnostic(&what, text, &e));
        let comps = self
            .field
            .iter()
            .enumerate()
            .map(|(i, t)| poly(format!("field[{i}]"), t))
            .collect::<Result<Vec<_>, _>>()?;
        let field = VectorField::new(&ctx, comps).map_err(|e| CliError::Usage(e.to_string()))?;
        let formula = |what: &str, text: &Option<String>| {
            text.as_deref().map(|t| parse_formula(t, &ctx).map_err(|e| diagnostic(what, t, &e))).transpose()
        };
        let candidate = formula("candidate", &self.candidate)?;
        let constraint = formula("constraint", &self.constraint)?;
        let polys = match &self.polys {
            Some(ps) => Some(
                ps.iter().enumerate().map(|(i, t)| poly(format!("polys[{i}]"), t)).collect::<Result<Vec<_>, _>>()?,
            ),
            None => None,
        };
        Ok(Problem { name: self.name.clone(), ctx, field, candidate, constraint, polys })
    }
}

/// The droplet problem: half-planes tangent to the unit circle at the
/// rational points `(2t/(t²+1), (t²−1)/(t²+1))` for `t = −2, −2 + 1/8, …, 2`,
/// under `x' = −x³, y' = −y³ + x`.
pub fn droplet_problem() -> ProblemFile {
    let ctx = VarContext::new(&["x", "y"]).expect("valid names");
    let x = Polynomial::var(&ctx, 0).expect("index 0");
    let y = Polynomial::var(&ctx, 1).expect("index 1");
    let mut atoms = Vec::new();
    for n in 0..=32 {
        let t = Rational::new((-16 + n).into(), 8.into());
        let d = &t * &t + Rational::from_integer(1.into());
        let xt = Rational::from_integer(2.into()) * &t / &d;
        let yt = (&t * &t - Rational::from_integer(1.into())) / &d;
        let lhs = &x.scale(&xt) + &y.scale(&yt);
        atoms.push(format!("{lhs} <= 1"));
    }
    ProblemFile {
        name: Some("droplet".into()),
        vars: vec!["x".into(), "y".into()],
        field: vec!["-x^3".into(), "-y^3 + x".into()],
        candidate: Some(atoms.join(" && ")),
        constraint: None,
        polys: None,
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    solver: Option<String>,
    timeout: Option<f64>,
}

fn config_path() -> Option<PathBuf> {
    if let Some(p) = std::env::var_os(CONFIG_ENV) {
        return Some(PathBuf::from(p));
    }
    let base = std::env::var_os("XDG_CONFIG_HOME")
        .map(PathBuf::from)
        .or_else(|| std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".config")))?;
    Some(base.join("invcheck").join("config.toml"))
}

fn load_config() -> Result<ConfigFile, CliError> {
    let Some(path) = config_path() else { return Ok(ConfigFile::default()) };
    match fs::read_to_string(&path) {
        Ok(text) => toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display()))),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(ConfigFile::default()),
        Err(e) => Err(CliError::Usage(format!("{}: {e}", path.display()))),
    }
}

/// Flag, then environment, then configuration file, then the built-in default.
pub fn resolve_solver(args: &SolverArgs) -> Result<SmtBackend, CliError> {
    let config = load_config()?;
    let command = args
        .solver
        .clone()
        .or_else(|| std::env::var(SOLVER_ENV).ok().filter(|s| !s.trim().is_empty()))
        .or(config.solver)
        .unwrap_or_else(|| DEFAULT_SOLVER.to_string());
    let timeout = match args.timeout.or(config.timeout) {
        Some(s) if s.is_finite() && s > 0.0 => Duration::from_secs_f64(s),
        Some(s) => return Err(CliError::Usage(format!("timeout must be a positive number of seconds, got {s}"))),
        None => DEFAULT_TIMEOUT,
    };
    Ok(SmtBackend::new(&command)?.with_timeout(timeout))
}

#[derive(Debug, Serialize)]
pub struct StatsReport {
    pub reduce_calls: usize,
    pub syntactic_skips: usize,
    pub unknown_queries: usize,
    pub queries: usize,
    pub per_query_times_s: Vec<f64>,
    pub total_query_time_s: f64,
    pub k: Option<usize>,
    pub m: Option<usize>,
    pub rho: Option<usize>,
    pub chunks: Option<usize>,
}

impl From<&QueryStats> for StatsReport {
    fn from(s: &QueryStats) -> Self {
        StatsReport {
            reduce_calls: s.reduce_calls,
            syntactic_skips: s.syntactic_skips,
            unknown_queries: s.unknown_queries,
            queries: s.per_query_times.len(),
            per_query_times_s: s.per_query_times.iter().map(Duration::as_secs_f64).collect(),
            total_query_time_s: s.total_query_time().as_secs_f64(),
            k: s.k,
            m: s.m,
            rho: s.rho,
            chunks: s.chunks,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct WitnessReport {
    pub point: Option<Vec<String>>,
    pub symbolic: Option<String>,
    pub branch: String,
    pub validated: Option<bool>,
}

impl From<&Witness> for WitnessReport {
    fn from(w: &Witness) -> Self {
        WitnessReport {
            point: w.point.as_ref().map(|p| p.iter().map(format_rational).collect()),
            symbolic: w.symbolic.clone(),
            branch: w.branch.to_string(),
            validated: w.validated,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub method: String,
    pub verdict: String,
    pub wall_time_s: f64,
    pub witness: Option<WitnessReport>,
    pub stats: StatsReport,
}

#[derive(Debug, Serialize)]
pub struct FalsifyReport {
    /// `escaped`, `no-escape` or `inconclusive`.
    pub status: String,
    pub source: String,
    pub time: Option<f64>,
    pub state: Option<Vec<f64>>,
    pub detail: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct CheckReport {
    pub problem: Option<String>,
    pub vars: Vec<String>,
    pub method: String,
    pub verdict: String,
    pub exit_code: i32,
    pub agreement: Option<bool>,
    pub runs: Vec<RunReport>,
    pub witness: Option<WitnessReport>,
    pub stats: StatsReport,
    pub wall_time_s: f64,
    pub falsify: Option<FalsifyReport>,
}

fn escape_report(source: &str, r: &EscapeReport) -> FalsifyReport {
    let (status, time, state, detail) = match r {
        EscapeReport::Escaped { time, state } => ("escaped", Some(*time), Some(state.clone()), None),
        EscapeReport::NoEscape => ("no-escape", None, None, None),
        EscapeReport::Inconclusive(why) => ("inconclusive", None, None, Some(why.clone())),
    };
    FalsifyReport { status: status.into(), source: source.into(), time, state, detail }
}

fn exit_for(a: Answer) -> i32 {
    match a {
        Answer::Invariant => EXIT_INVARIANT,
        Answer::NotInvariant => EXIT_NOT_INVARIANT,
        Answer::Unknown => EXIT_UNKNOWN,
    }
}

fn run_method(
    checker: &Checker<'_>,
    method: MethodArg,
    fine: bool,
    s: &Formula,
    q: Option<&Formula>,
) -> Result<(Verdict, Duration), CliError> {
    let start = Instant::now();
    let v = match (method, q) {
        (MethodArg::Lzz, None) => checker.lzz_check(s)?,
        (MethodArg::Lzz, Some(q)) => checker.lzz_check_constrained(s, q)?,
        (_, q) if fine => checker.es_check_fine(s, q)?,
        (_, None) => checker.es_check(s)?,
        (_, Some(q)) => checker.es_check_constrained(s, q)?,
    };
    Ok((v, start.elapsed()))
}

/// Numerical cross-check; returns the report and the trajectory start used.
fn falsify(
    answer: Answer,
    witness: Option<&Witness>,
    s: &Formula,
    f: &VectorField,
    cfg: &IntegratorConfig,
    seed: u64,
) -> (FalsifyReport, Option<Vec<f64>>) {
    if let Some(w) = witness.filter(|_| answer == Answer::NotInvariant) {
        let r = corroborate(w, s, f, cfg);
        let start = witness_start(w, f.context()).map(|x0| match w.branch {
            Direction::Forward => x0,
            Direction::Backward => {
                let h = match &r {
                    EscapeReport::Escaped { time, .. } => *time,
                    _ => cfg.step,
                };
                crate::falsify::rk4_step(&f.reverse(), &x0, h)
            }
        });
        return (escape_report("witness", &r), start);
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let samples = sample_points(s, f.dim(), 2.0, cfg.samples, cfg.eps, &mut rng);
    if samples.is_empty() {
        return (escape_report("samples", &EscapeReport::Inconclusive("no sample of the set found".into())), None);
    }
    let mut inconclusive = None;
    for x0 in &samples {
        match simulate_escape(x0, s, f, cfg) {
            r @ EscapeReport::Escaped { .. } => return (escape_report("samples", &r), Some(x0.clone())),
            EscapeReport::Inconclusive(why) => inconclusive = Some(why),
            EscapeReport::NoEscape => {}
        }
    }
    let r = match inconclusive {
        Some(why) => EscapeReport::Inconclusive(why),
        None => EscapeReport::NoEscape,
    };
    (escape_report("samples", &r), samples.first().cloned())
}

fn witness_text(w: &Witness, ctx: &VarContext) -> String {
    let names = ctx.names().join(", ");
    let coords = match (&w.point, &w.symbolic) {
        (Some(p), _) => format!("= ({})", p.iter().map(format_rational).collect::<Vec<_>>().join(", ")),
        (None, Some(sym)) => match model_point_f64(sym, ctx) {
            Some(p) => format!("≈ ({})", p.iter().map(|v| format!("{v:.12}")).collect::<Vec<_>>().join(", ")),
            None => format!("= {}", sym.split_whitespace().collect::<Vec<_>>().join(" ")),
        },
        (None, None) => "unavailable".into(),
    };
    let validated = match w.validated {
        Some(true) => "validated",
        Some(false) => "validation failed",
        None => "not validated",
    };
    format!("({names}) {coords} [{}, {validated}]", w.branch)
}

fn stats_lines(out: &mut String, label: &str, s: &StatsReport) {
    use std::fmt::Write as _;
    let _ = writeln!(out, "{label}unknown_queries: {}", s.unknown_queries);
    let _ = writeln!(out, "{label}queries: {}", s.queries);
    let _ = writeln!(out, "{label}query_time: {:.6} s", s.total_query_time_s);
    let opt = |v: Option<usize>| v.map_or("-".to_string(), |v| v.to_string());
    let _ = writeln!(out, "{label}shape: k = {}, m = {}, rho = {}", opt(s.k), opt(s.m), opt(s.rho));
    if let Some(c) = s.chunks {
        let _ = writeln!(out, "{label}chunks: {c}");
    }
}

pub fn cmd_check(args: &CheckArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let started = Instant::now();
    let problem = ProblemFile::load(&args.problem)?.compile()?;
    let Some(s) = problem.candidate.clone() else {
        return Err(CliError::Usage("problem file has no `candidate`".into()));
    };
    let q = problem.constraint.clone().filter(|q| !q.is_true());
    let cfg = IntegratorConfig::default();
    let backend = resolve_solver(&args.solver)?;
    let options = if args.strict { CheckOptions::strict() } else { CheckOptions::default() };
    let checker = Checker::new(&problem.field, &backend, options);
    let methods = match args.method {
        MethodArg::Both => vec![MethodArg::Lzz, MethodArg::Es],
        m => vec![m],
    };
    let mut runs = Vec::new();
    for m in methods {
        runs.push(run_method(&checker, m, args.fine, &s, q.as_ref())?);
    }
    let definite: Vec<Answer> = runs.iter().map(|(v, _)| v.answer).filter(|a| *a != Answer::Unknown).collect();
    let agreement = (runs.len() == 2).then(|| definite.windows(2).all(|w| w[0] == w[1]));
    let answer = definite.first().copied().unwrap_or(Answer::Unknown);
    let mut total = QueryStats::default();
    for (v, _) in &runs {
        total.merge(&v.stats);
        total.k = total.k.or(v.stats.k);
        total.m = total.m.or(v.stats.m);
        total.rho = total.rho.or(v.stats.rho);
        total.chunks = total.chunks.or(v.stats.chunks);
    }
    let witness = runs.iter().find_map(|(v, _)| v.witness.as_ref().filter(|_| v.answer == Answer::NotInvariant));
    let code = if agreement == Some(false) { EXIT_INTERNAL } else { exit_for(answer) };

    let mut falsify_report = None;
    if args.falsify || args.trajectory_csv.is_some() {
        let (report, start) = falsify(answer, witness, &s, &problem.field, &cfg, args.seed);
        if let (Some(path), Some(x0)) = (&args.trajectory_csv, start) {
            let rows = trajectory(&x0, &problem.field, &cfg);
            let file = fs::File::create(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            write_trajectory_csv(std::io::BufWriter::new(file), problem.ctx.names(), &rows)
                .map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))?;
        }
        if args.falsify {
            falsify_report = Some(report);
        }
    }

    let report = CheckReport {
        problem: problem.name.clone(),
        vars: problem.ctx.names().to_vec(),
        method: format!("{:?}", args.method).to_lowercase(),
        verdict: if code == EXIT_INTERNAL { "disagreement".into() } else { answer.to_string() },
        exit_code: code,
        agreement,
        runs: runs
            .iter()
            .map(|(v, t)| RunReport {
                method: v.method.to_string(),
                verdict: v.answer.to_string(),
                wall_time_s: t.as_secs_f64(),
                witness: v.witness.as_ref().map(WitnessReport::from),
                stats: StatsReport::from(&v.stats),
            })
            .collect(),
        witness: witness.map(WitnessReport::from),
        stats: StatsReport::from(&total),
        wall_time_s: started.elapsed().as_secs_f64(),
        falsify: falsify_report,
    };
    let text = match args.format {
        Format::Json => serde_json::to_string_pretty(&report).expect("serializable report") + "\n",
        Format::Text => check_text(&report, &runs, witness, &problem.ctx, args.stats),
    };
    out.write_all(text.as_bytes()).map_err(|e| CliError::Internal(e.to_string()))?;
    Ok(code)
}

fn check_text(
    report: &CheckReport,
    runs: &[(Verdict, Duration)],
    witness: Option<&Witness>,
    ctx: &VarContext,
    stats: bool,
) -> String {
    use std::fmt::Write as _;
    let mut t = String::new();
    if let Some(name) = &report.problem {
        let _ = writeln!(t, "problem: {name}");
    }
    let _ = writeln!(t, "verdict: {}", report.verdict);
    for (r, (v, _)) in report.runs.iter().zip(runs) {
        let _ = writeln!(
            t,
            "{}: {} (reduce_calls {}, syntactic_skips {}, {:.3} s)",
            r.method, r.verdict, r.stats.reduce_calls, r.stats.syntactic_skips, r.wall_time_s
        );
        if stats {
            stats_lines(&mut t, &format!("  {}.", v.method), &r.stats);
        }
    }
    match report.agreement {
        Some(true) => {
            let _ = writeln!(t, "agreement: lzz and es agree");
        }
        Some(false) => {
            let _ = writeln!(t, "agreement: DISAGREEMENT between lzz and es");
        }
        None => {}
    }
    if let Some(w) = witness {
        let _ = writeln!(t, "witness: {}", witness_text(w, ctx));
    }
    let _ = writeln!(t, "reduce_calls: {}", report.stats.reduce_calls);
    let _ = writeln!(t, "syntactic_skips: {}", report.stats.syntactic_skips);
    let _ = writeln!(t, "wall_time: {:.3} s", report.wall_time_s);
    if let Some(f) = &report.falsify {
        let _ = match (f.status.as_str(), f.time) {
            ("escaped", Some(time)) => writeln!(t, "falsify: escaped at t = {time} from {} (advisory)", f.source),
            (status, _) => writeln!(
                t,
                "falsify: {status} from {}{} (advisory)",
                f.source,
                f.detail.as_deref().map(|d| format!(": {d}")).unwrap_or_default()
            ),
        };
    }
    t
}

#[derive(Debug, Serialize)]
struct CellReport {
    index: usize,
    label: String,
}

#[derive(Debug, Serialize)]
struct EdgeReport {
    from: usize,
    to: usize,
    possible: bool,
}

#[derive(Debug, Serialize)]
struct AbstractReport {
    problem: Option<String>,
    cells: Vec<CellReport>,
    edges: Vec<EdgeReport>,
    possible_edges: usize,
    edges_file: String,
    dot_file: String,
    probe_violations: Option<usize>,
    stats: Option<StatsReport>,
    wall_time_s: f64,
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn cmd_abstract(args: &AbstractArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let started = Instant::now();
    let problem = ProblemFile::load(&args.problem)?.compile()?;
    let Some(polys) = problem.polys.clone() else {
        return Err(CliError::Usage("problem file has no `polys`".into()));
    };
    let backend = resolve_solver(&args.solver)?;
    let checker = Checker::new(&problem.field, &backend, CheckOptions::default());
    let graph: AbstractionGraph = abstraction(&polys, &checker, &backend)?;
    let edges_path = args.edges.clone().unwrap_or_else(|| args.problem.with_extension("edges"));
    let dot_path = args.dot.clone().unwrap_or_else(|| args.problem.with_extension("dot"));
    write_file(&edges_path, &graph.to_edge_list())?;
    write_file(&dot_path, &graph.to_dot())?;
    let violations = args.probe.then(|| {
        let mut rng = StdRng::seed_from_u64(args.seed);
        soundness_probe(&graph, &problem.field, &IntegratorConfig::default(), 2.0, &mut rng).len()
    });
    let possible = graph.edges.iter().filter(|e| e.kind == EdgeKind::Possible).count();
    let report = AbstractReport {
        problem: problem.name.clone(),
        cells: graph.cells.iter().enumerate().map(|(index, c)| CellReport { index, label: c.label.clone() }).collect(),
        edges: graph
            .edges
            .iter()
            .map(|e| EdgeReport { from: e.from, to: e.to, possible: e.kind == EdgeKind::Possible })
            .collect(),
        possible_edges: possible,
        edges_file: edges_path.display().to_string(),
        dot_file: dot_path.display().to_string(),
        probe_violations: violations,
        stats: args.stats.then(|| StatsReport::from(&graph.stats)),
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    let text = match args.format {
        Format::Json => serde_json::to_string_pretty(&report).expect("serializable report") + "\n",
        Format::Text => {
            let mut t = format!(
                "cells: {}\nedges: {} ({} possible)\nedge list: {}\ndot: {}\n",
                report.cells.len(),
                report.edges.len(),
                possible,
                report.edges_file,
                report.dot_file
            );
            if let Some(v) = violations {
                t.push_str(&format!("probe violations: {v}\n"));
            }
            if let Some(st) = &report.stats {
                t.push_str(&format!(
                    "queries: {}\nunknown_queries: {}\nquery_time: {:.3} s\nwall_time: {:.3} s\n",
                    st.queries, st.unknown_queries, st.total_query_time_s, report.wall_time_s
                ));
            }
            t
        }
    };
    out.write_all(text.as_bytes()).map_err(|e| CliError::Internal(e.to_string()))?;
    Ok(if violations.unwrap_or(0) > 0 { EXIT_INTERNAL } else { 0 })
}

pub fn cmd_gen_droplet(args: &GenDropletArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let text = serde_json::to_string_pretty(&droplet_problem()).expect("serializable problem") + "\n";
    match &args.output {
        Some(path) => write_file(path, &text)?,
        None => out.write_all(text.as_bytes()).map_err(|e| CliError::Internal(e.to_string()))?,
    }
    Ok(0)
}

/// Parses `argv` and runs the selected command; returns the exit status.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{}", e.render()) } else { write!(out, "{}", e.render()) };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Check(a) => cmd_check(a, out),
        Command::Abstract(a) => cmd_abstract(a, out),
        Command::GenDroplet(a) => cmd_gen_droplet(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

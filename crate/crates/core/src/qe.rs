//! Emptiness queries for semi-algebraic sets through an external SMT solver
//! speaking SMT-LIB 2 (logic `QF_NRA`) on stdin/stdout.

use std::fmt::{self, Write as _};
use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::formula::{Atom, Formula};
use crate::poly::{PolyError, Polynomial, Rational, VarContext};

pub const DEFAULT_SOLVER: &str = "z3 -in";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QeError {
    #[error("solver `{0}` could not be started: {1}")]
    SolverNotFound(String, String),
    #[error("solver I/O failure: {0}")]
    Io(String),
    #[error("could not understand solver output: {0}")]
    Protocol(String),
    #[error("empty solver command")]
    EmptyCommand,
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SatStatus {
    Sat,
    Unsat,
    Unknown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SatResult {
    pub status: SatStatus,
    /// Rational model in context order. Absent when unsat/unknown or when
    /// the solver answered with algebraic numbers.
    pub model: Option<Vec<Rational>>,
    /// Raw model text when it could not be read as rationals.
    pub symbolic_model: Option<String>,
    pub elapsed: Duration,
    pub timed_out: bool,
    /// True when the answer came from folding, without a solver process.
    pub trivial: bool,
}

impl SatResult {
    fn trivial(status: SatStatus, model: Option<Vec<Rational>>) -> Self {
        SatResult { status, model, symbolic_model: None, elapsed: Duration::ZERO, timed_out: false, trivial: true }
    }
}

/// Anything that can decide satisfiability of a quantifier-free formula.
pub trait SatBackend: Send + Sync {
    fn check_sat(&self, s: &Formula, ctx: &VarContext) -> Result<SatResult, QeError>;
}

/// One solver process per query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmtBackend {
    command: Vec<String>,
    fallback: Option<Vec<String>>,
    timeout: Duration,
}

fn split_command(cmd: &str) -> Result<Vec<String>, QeError> {
    let parts: Vec<String> = cmd.split_whitespace().map(str::to_string).collect();
    if parts.is_empty() {
        Err(QeError::EmptyCommand)
    } else {
        Ok(parts)
    }
}

impl SmtBackend {
    pub fn new(command: &str) -> Result<Self, QeError> {
        Ok(SmtBackend { command: split_command(command)?, fallback: None, timeout: DEFAULT_TIMEOUT })
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    /// Solver tried when the primary one answers unknown.
    pub fn with_fallback(mut self, command: &str) -> Result<Self, QeError> {
        self.fallback = Some(split_command(command)?);
        Ok(self)
    }

    pub fn command(&self) -> String {
        self.command.join(" ")
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    /// Starts the solver on a trivial script; useful for early diagnostics.
    pub fn probe(&self) -> Result<(), QeError> {
        let ctx = VarContext::new(&["x"]).expect("valid context");
        let x = Polynomial::var(&ctx, 0).expect("index 0");
        let r = run_solver(&self.command, &smt_script(&Formula::eq(x), &ctx), &ctx, self.timeout)?;
        match r.status {
            SatStatus::Sat => Ok(()),
            other => Err(QeError::Protocol(format!("probe query answered {other:?}"))),
        }
    }
}

/// Most cubes tried when a query times out whole.
const SPLIT_CAP: usize = 256;
const MIN_CUBE_BUDGET: Duration = Duration::from_millis(200);

/// Case split of a `Not`-free formula into conjunctions of literals (cubes)
/// whose disjunction is equivalent to `s`. Branches on one disjunction at a
/// time and propagates the literals committed so far. `None` past `cap`
/// cubes or `64 * cap` branching steps.
fn cubes(s: &Formula, cap: usize) -> Option<Vec<Vec<Formula>>> {
    let mut out = Vec::new();
    let mut steps = cap.saturating_mul(64);
    split_cases(Vec::new(), vec![s.clone()], &mut out, cap, &mut steps).then_some(out)
}

fn split_cases(
    mut committed: Vec<Formula>,
    mut pending: Vec<Formula>,
    out: &mut Vec<Vec<Formula>>,
    cap: usize,
    steps: &mut usize,
) -> bool {
    if *steps == 0 {
        return false;
    }
    *steps -= 1;
    loop {
        let mut changed = false;
        let mut next = Vec::new();
        for p in &pending {
            let q = propagate(p, &committed);
            if q.is_false() {
                return true;
            }
            let mut parts = Vec::new();
            flatten(&q, true, &mut parts);
            for c in parts {
                match c {
                    Formula::Atom(Atom::True) => {}
                    Formula::Atom(_) => {
                        if !committed.contains(c) {
                            committed.push(c.clone());
                            changed = true;
                            if contradictory(&committed) {
                                return true;
                            }
                        }
                    }
                    _ => next.push(c.clone()),
                }
            }
        }
        pending = next;
        if !changed {
            break;
        }
    }
    if pending.is_empty() {
        out.push(committed);
        return out.len() <= cap;
    }
    let branch_sizes: Vec<Vec<&Formula>> = pending
        .iter()
        .map(|p| {
            let mut v = Vec::new();
            flatten(p, false, &mut v);
            v
        })
        .collect();
    let i = (0..pending.len()).min_by_key(|&j| branch_sizes[j].len()).expect("pending is non-empty");
    let rest: Vec<Formula> = pending.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, p)| p.clone()).collect();
    for child in &branch_sizes[i] {
        let mut todo = rest.clone();
        todo.push((*child).clone());
        if !split_cases(committed.clone(), todo, out, cap, steps) {
            return false;
        }
    }
    true
}

/// `s` with each polynomial `±p` replaced by `±a_i` for a fresh variable
/// `a_i`, which keeps only the sign pattern of the atoms. Every model of
/// `s` yields one of the abstraction, so an unsatisfiable abstraction
/// proves `s` unsatisfiable.
fn sign_abstraction(s: &Formula) -> (Formula, VarContext) {
    let mut polys: Vec<Polynomial> = Vec::new();
    for a in s.atoms() {
        if let Some(p) = a.polynomial() {
            if !polys.iter().any(|q| q == p || q == &-p) {
                polys.push(p.clone());
            }
        }
    }
    let names: Vec<String> = (0..polys.len().max(1)).map(|i| format!("a{i}")).collect();
    let actx = VarContext::new(&names).expect("fresh names are distinct");
    let image = |p: &Polynomial| {
        let (i, sign) = polys
            .iter()
            .enumerate()
            .find_map(|(i, q)| {
                if q == p {
                    Some((i, true))
                } else if *q == -p {
                    Some((i, false))
                } else {
                    None
                }
            })
            .expect("every atom polynomial is registered");
        let v = Polynomial::var(&actx, i).expect("index within the fresh context");
        if sign {
            v
        } else {
            -v
        }
    };
    fn rebuild(s: &Formula, image: &dyn Fn(&Polynomial) -> Polynomial) -> Formula {
        match s {
            Formula::Atom(Atom::Lt(p)) => Formula::lt(image(p)),
            Formula::Atom(Atom::Eq(p)) => Formula::eq(image(p)),
            Formula::Atom(_) => s.clone(),
            Formula::And(a, b) => Formula::and(rebuild(a, image), rebuild(b, image)),
            Formula::Or(a, b) => Formula::or(rebuild(a, image), rebuild(b, image)),
            Formula::Not(a) => Formula::not(rebuild(a, image)),
        }
    }
    (rebuild(s, &image), actx)
}

fn has_disjunction(s: &Formula) -> bool {
    match s {
        Formula::Or(..) => true,
        Formula::And(a, b) => has_disjunction(a) || has_disjunction(b),
        Formula::Atom(_) | Formula::Not(_) => false,
    }
}

/// Children of nested `And` (when `conj`) or `Or` nodes.
fn flatten<'a>(s: &'a Formula, conj: bool, out: &mut Vec<&'a Formula>) {
    match (s, conj) {
        (Formula::And(a, b), true) | (Formula::Or(a, b), false) => {
            flatten(a, conj, out);
            flatten(b, conj, out);
        }
        _ => out.push(s),
    }
}

/// Replaces literals decided by `committed` with constants and folds.
fn propagate(s: &Formula, committed: &[Formula]) -> Formula {
    match s {
        Formula::Atom(Atom::Lt(_) | Atom::Eq(_)) => {
            if committed.contains(s) {
                return Formula::tt();
            }
            let mut with = committed.to_vec();
            with.push(s.clone());
            if contradictory(&with) {
                Formula::ff()
            } else {
                s.clone()
            }
        }
        Formula::Atom(_) | Formula::Not(_) => s.clone(),
        Formula::And(a, b) => Formula::and(propagate(a, committed), propagate(b, committed)).simplify(),
        Formula::Or(a, b) => Formula::or(propagate(a, committed), propagate(b, committed)).simplify(),
    }
}

/// Literal pairs `p < 0` with `-p < 0`, or `p < 0` with `±p = 0`.
fn contradictory(lits: &[Formula]) -> bool {
    let lts: Vec<&Polynomial> = lits
        .iter()
        .filter_map(|l| match l.as_atom() {
            Some(Atom::Lt(p)) => Some(p),
            _ => None,
        })
        .collect();
    lits.iter().any(|l| match l.as_atom() {
        Some(Atom::Lt(p)) => lts.iter().any(|q| (-p).eq(q)),
        Some(Atom::Eq(p)) => lts.iter().any(|q| p == *q || (-p).eq(q)),
        _ => false,
    })
}

impl SmtBackend {
    fn solve(&self, s: &Formula, ctx: &VarContext, budget: Duration) -> Result<SatResult, QeError> {
        let script = smt_script(s, ctx);
        let mut result = run_solver(&self.command, &script, ctx, budget)?;
        if result.status == SatStatus::Unknown && !result.timed_out {
            if let Some(fb) = &self.fallback {
                let second = run_solver(fb, &script, ctx, budget)?;
                let spent = result.elapsed + second.elapsed;
                result = second;
                result.elapsed = spent;
            }
        }
        Ok(result)
    }

    /// Queries the cubes one by one, sharing what is left of the budget.
    fn solve_split(&self, parts: Vec<Vec<Formula>>, ctx: &VarContext, deadline: Instant) -> Result<SatResult, QeError> {
        let total = parts.len();
        let mut unknown = None;
        for (i, part) in parts.into_iter().enumerate() {
            let left = deadline.saturating_duration_since(Instant::now());
            let budget = (left / (total - i) as u32).max(MIN_CUBE_BUDGET).min(left);
            if budget.is_zero() {
                return Ok(SatResult { timed_out: true, ..SatResult::trivial(SatStatus::Unknown, None) });
            }
            let r = self.solve(&Formula::conj(part), ctx, budget)?;
            match r.status {
                SatStatus::Sat => return Ok(r),
                SatStatus::Unsat => {}
                SatStatus::Unknown => unknown = Some(r),
            }
        }
        Ok(unknown.unwrap_or_else(|| SatResult::trivial(SatStatus::Unsat, None)))
    }
}

impl SatBackend for SmtBackend {
    /// Queries `s` whole first. A whole query that times out is retried as
    /// separate cubes of a case split when there are few enough of them.
    fn check_sat(&self, s: &Formula, ctx: &VarContext) -> Result<SatResult, QeError> {
        let folded = s.fold_constants().simplify();
        if folded.is_false() {
            return Ok(SatResult::trivial(SatStatus::Unsat, None));
        }
        if folded.is_true() {
            return Ok(SatResult::trivial(SatStatus::Sat, Some(vec![Rational::zero(); ctx.dim()])));
        }
        let start = Instant::now();
        let nnf = folded.without_not();
        let first = if has_disjunction(&nnf) { self.timeout / 4 } else { self.timeout };
        let mut result = self.solve(&folded, ctx, first)?;
        if result.timed_out && first < self.timeout {
            let deadline = start + self.timeout;
            let (abs, actx) = sign_abstraction(&folded);
            let coarse = self.solve(&abs, &actx, self.timeout / 4)?;
            result = if coarse.status == SatStatus::Unsat {
                coarse
            } else {
                match cubes(&nnf, SPLIT_CAP).filter(|d| d.len() > 1) {
                    Some(parts) => self.solve_split(parts, ctx, deadline)?,
                    None => self.solve(&folded, ctx, deadline.saturating_duration_since(Instant::now()))?,
                }
            };
            result.trivial = false;
        }
        result.elapsed = start.elapsed();
        if result.status == SatStatus::Sat {
            if let Some(m) = &result.model {
                // a model that fails exact evaluation is not a witness
                if !folded.evaluate(m)? {
                    result.symbolic_model = Some(format!("solver model failed exact check: {}", format_point(m)));
                    result.model = None;
                }
            }
        }
        Ok(result)
    }
}

pub fn format_point(point: &[Rational]) -> String {
    let items: Vec<String> = point.iter().map(crate::poly::format_rational).collect();
    format!("({})", items.join(", "))
}

fn run_solver(command: &[String], script: &str, ctx: &VarContext, timeout: Duration) -> Result<SatResult, QeError> {
    let start = Instant::now();
    let mut child = Command::new(&command[0])
        .args(&command[1..])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| QeError::SolverNotFound(command.join(" "), e.to_string()))?;
    let mut stdout = child.stdout.take().expect("piped stdout");
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let mut out = String::new();
        let r = stdout.read_to_string(&mut out).map(|_| out);
        let _ = tx.send(r);
    });
    {
        let mut stdin = child.stdin.take().expect("piped stdin");
        // a solver that exits early closes the pipe; its output still tells
        let _ = stdin.write_all(script.as_bytes());
    }
    match rx.recv_timeout(timeout) {
        Ok(Ok(out)) => {
            let _ = child.wait();
            let elapsed = start.elapsed();
            let (status, model, symbolic_model) = parse_solver_output(&out, ctx)?;
            Ok(SatResult { status, model, symbolic_model, elapsed, timed_out: false, trivial: false })
        }
        Ok(Err(e)) => {
            let _ = child.kill();
            let _ = child.wait();
            Err(QeError::Io(e.to_string()))
        }
        Err(_) => {
            let _ = child.kill();
            let _ = child.wait();
            Ok(SatResult {
                status: SatStatus::Unknown,
                model: None,
                symbolic_model: None,
                elapsed: start.elapsed(),
                timed_out: true,
                trivial: false,
            })
        }
    }
}

type ParsedOutput = (SatStatus, Option<Vec<Rational>>, Option<String>);

fn parse_solver_output(out: &str, ctx: &VarContext) -> Result<ParsedOutput, QeError> {
    let mut lines = out.lines();
    let mut errors = Vec::new();
    let status = loop {
        let Some(line) = lines.next() else {
            let detail = if errors.is_empty() { "no status line".to_string() } else { errors.join("; ") };
            return Err(QeError::Protocol(detail));
        };
        match line.trim() {
            "sat" => break SatStatus::Sat,
            "unsat" => break SatStatus::Unsat,
            "unknown" => break SatStatus::Unknown,
            "" | "success" => {}
            other => errors.push(other.to_string()),
        }
    };
    if status != SatStatus::Sat {
        return Ok((status, None, None));
    }
    let rest = lines.collect::<Vec<_>>().join("\n");
    let exprs = parse_sexprs(&rest).map_err(QeError::Protocol)?;
    let Some(model) = exprs.iter().find(|e| is_model(e)) else {
        return Ok((status, None, Some("solver returned no model".into())));
    };
    match model_point(model, ctx) {
        Some(point) => Ok((status, Some(point), None)),
        None => Ok((status, None, Some(model.to_string()))),
    }
}

fn is_model(e: &SExpr) -> bool {
    match e {
        SExpr::List(items) => {
            let body = match items.first() {
                Some(SExpr::Atom(h)) if h == "model" => &items[1..],
                _ => &items[..],
            };
            body.iter().all(
                |d| matches!(d, SExpr::List(xs) if matches!(xs.first(), Some(SExpr::Atom(h)) if h == "define-fun")),
            )
        }
        SExpr::Atom(_) => false,
    }
}

/// Point in context order when every context variable bound by the model
/// has a rational value. Unbound variables default to zero.
fn model_point(model: &SExpr, ctx: &VarContext) -> Option<Vec<Rational>> {
    let SExpr::List(items) = model else { return None };
    let mut point = vec![Rational::zero(); ctx.dim()];
    for d in items {
        let SExpr::List(xs) = d else { continue };
        if xs.len() != 5 {
            continue;
        }
        let (SExpr::Atom(name), SExpr::List(args)) = (&xs[1], &xs[2]) else { continue };
        if !args.is_empty() {
            continue;
        }
        if let Some(i) = ctx.index_of(unquote(name)) {
            point[i] = sexpr_rational(&xs[4])?;
        }
    }
    Some(point)
}

fn unquote(name: &str) -> &str {
    name.strip_prefix('|').and_then(|n| n.strip_suffix('|')).unwrap_or(name)
}

/// Rational value of a constant SMT term (`1.5`, `(- 2)`, `(/ 1.0 3.0)`).
pub fn sexpr_rational(e: &SExpr) -> Option<Rational> {
    match e {
        SExpr::Atom(a) => parse_decimal(a),
        SExpr::List(items) => {
            let SExpr::Atom(head) = items.first()? else { return None };
            let args: Option<Vec<Rational>> = items[1..].iter().map(sexpr_rational).collect();
            let args = args?;
            match (head.as_str(), args.as_slice()) {
                ("-", [a]) => Some(-a),
                ("-", [a, rest @ ..]) => Some(rest.iter().fold(a.clone(), |acc, x| acc - x)),
                ("+", xs) => Some(xs.iter().fold(Rational::zero(), |acc, x| acc + x)),
                ("*", xs) => Some(xs.iter().fold(Rational::one(), |acc, x| acc * x)),
                ("/", [a, b]) if !b.is_zero() => Some(a / b),
                _ => None,
            }
        }
    }
}

fn parse_decimal(s: &str) -> Option<Rational> {
    let (int_part, frac) = s.split_once('.').unwrap_or((s, ""));
    if int_part.is_empty() || !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit())
    {
        return None;
    }
    let digits: BigInt = format!("{int_part}{frac}").parse().ok()?;
    let scale = num_traits::pow(BigInt::from(10), frac.len());
    Some(Rational::new(digits, scale))
}

/// S-expression tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SExpr {
    Atom(String),
    List(Vec<SExpr>),
}

impl fmt::Display for SExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SExpr::Atom(a) => f.write_str(a),
            SExpr::List(items) => {
                f.write_char('(')?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_char(' ')?;
                    }
                    write!(f, "{it}")?;
                }
                f.write_char(')')
            }
        }
    }
}

/// Parses a sequence of s-expressions. Handles `;` comments, `|quoted|`
/// symbols and `"strings"`.
pub fn parse_sexprs(text: &str) -> Result<Vec<SExpr>, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut stack: Vec<Vec<SExpr>> = vec![Vec::new()];
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ';' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '(' => {
                stack.push(Vec::new());
                i += 1;
            }
            ')' => {
                let done = stack.pop().filter(|_| !stack.is_empty()).ok_or("unbalanced `)`")?;
                stack.last_mut().expect("outer level").push(SExpr::List(done));
                i += 1;
            }
            c if c.is_whitespace() => i += 1,
            '|' | '"' => {
                let start = i;
                i += 1;
                while i < chars.len() && chars[i] != c {
                    i += 1;
                }
                if i == chars.len() {
                    return Err("unterminated quoted token".into());
                }
                i += 1;
                stack.last_mut().expect("level").push(SExpr::Atom(chars[start..i].iter().collect()));
            }
            _ => {
                let start = i;
                while i < chars.len() && !chars[i].is_whitespace() && !matches!(chars[i], '(' | ')' | ';') {
                    i += 1;
                }
                stack.last_mut().expect("level").push(SExpr::Atom(chars[start..i].iter().collect()));
            }
        }
    }
    if stack.len() != 1 {
        return Err("unbalanced `(`".into());
    }
    Ok(stack.pop().expect("top level"))
}

fn smt_symbol(name: &str) -> String {
    let simple = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if simple {
        name.to_string()
    } else {
        format!("|{name}|")
    }
}

fn smt_rational(c: &Rational) -> String {
    let mag =
        if c.is_integer() { c.numer().abs().to_string() } else { format!("(/ {} {})", c.numer().abs(), c.denom()) };
    if c.is_negative() {
        format!("(- {mag})")
    } else {
        mag
    }
}

/// SMT-LIB term for a polynomial; powers become repeated products.
pub fn polynomial_to_smt(p: &Polynomial) -> String {
    let names = p.context().names();
    let terms: Vec<String> = p
        .terms()
        .iter()
        .map(|(m, c)| {
            let mut factors = Vec::new();
            if !c.is_one() || m.is_one() {
                factors.push(smt_rational(c));
            }
            for (i, &e) in m.0.iter().enumerate() {
                for _ in 0..e {
                    factors.push(smt_symbol(&names[i]));
                }
            }
            if factors.len() == 1 {
                factors.pop().expect("one factor")
            } else {
                format!("(* {})", factors.join(" "))
            }
        })
        .collect();
    match terms.len() {
        0 => "0".to_string(),
        1 => terms.into_iter().next().expect("one term"),
        _ => format!("(+ {})", terms.join(" ")),
    }
}

/// SMT-LIB term for a formula; Boolean structure is kept verbatim.
pub fn formula_to_smt(s: &Formula) -> String {
    match s {
        Formula::Atom(Atom::True) => "true".into(),
        Formula::Atom(Atom::False) => "false".into(),
        Formula::Atom(Atom::Lt(p)) => format!("(< {} 0)", polynomial_to_smt(p)),
        Formula::Atom(Atom::Eq(p)) => format!("(= {} 0)", polynomial_to_smt(p)),
        Formula::And(a, b) => format!("(and {} {})", formula_to_smt(a), formula_to_smt(b)),
        Formula::Or(a, b) => format!("(or {} {})", formula_to_smt(a), formula_to_smt(b)),
        Formula::Not(a) => format!("(not {})", formula_to_smt(a)),
    }
}

/// Full script asking for satisfiability of `s` and, on sat, a model.
pub fn smt_script(s: &Formula, ctx: &VarContext) -> String {
    let mut out = String::from("(set-option :produce-models true)\n(set-logic QF_NRA)\n");
    for n in ctx.names() {
        let _ = writeln!(out, "(declare-const {} Real)", smt_symbol(n));
    }
    let _ = writeln!(out, "(assert {})", formula_to_smt(s));
    out.push_str("(check-sat)\n(get-model)\n(exit)\n");
    out
}

/// Reads a polynomial term back from SMT-LIB syntax.
pub fn sexpr_to_polynomial(e: &SExpr, ctx: &VarContext) -> Result<Polynomial, String> {
    match e {
        SExpr::Atom(a) => {
            if let Some(v) = parse_decimal(a) {
                return Ok(Polynomial::constant(ctx, v));
            }
            let name = unquote(a);
            let i = ctx.index_of(name).ok_or_else(|| format!("unknown symbol `{name}`"))?;
            Ok(Polynomial::var(ctx, i).expect("index from context"))
        }
        SExpr::List(items) => {
            let Some(SExpr::Atom(head)) = items.first() else { return Err("empty application".into()) };
            let args: Result<Vec<Polynomial>, String> =
                items[1..].iter().map(|x| sexpr_to_polynomial(x, ctx)).collect();
            let args = args?;
            match (head.as_str(), args.as_slice()) {
                ("-", [a]) => Ok(-a),
                ("-", [a, rest @ ..]) => Ok(rest.iter().fold(a.clone(), |acc, x| &acc - x)),
                ("+", xs) => Ok(xs.iter().fold(Polynomial::zero(ctx), |acc, x| &acc + x)),
                ("*", xs) => Ok(xs.iter().fold(Polynomial::one(ctx), |acc, x| &acc * x)),
                ("/", [a, b]) => match b.as_constant() {
                    Some(c) if !c.is_zero() => Ok(a.scale(&c.recip())),
                    _ => Err("division by a non-constant".into()),
                },
                ("^", [a, b]) => match b.as_constant().filter(|c| c.is_integer()).and_then(|c| c.to_integer().to_u32())
                {
                    Some(e) => Ok(a.pow(e)),
                    None => Err("exponent is not a small natural number".into()),
                },
                _ => Err(format!("unsupported application `{head}`")),
            }
        }
    }
}

/// Outcome of an equivalence check.
#[derive(Debug, Clone, PartialEq)]
pub enum Equivalence {
    Equivalent,
    /// A point in the symmetric difference, when rational.
    Different(Option<Vec<Rational>>),
    Unknown,
}

/// Decides `a ↔ b` by two satisfiability queries.
pub fn check_equivalence(
    a: &Formula,
    b: &Formula,
    ctx: &VarContext,
    backend: &dyn SatBackend,
) -> Result<Equivalence, QeError> {
    let mut unknown = false;
    for q in [Formula::and(a.clone(), b.negated()), Formula::and(b.clone(), a.negated())] {
        let r = backend.check_sat(&q, ctx)?;
        match r.status {
            SatStatus::Sat => return Ok(Equivalence::Different(r.model)),
            SatStatus::Unknown => unknown = true,
            SatStatus::Unsat => {}
        }
    }
    Ok(if unknown { Equivalence::Unknown } else { Equivalence::Equivalent })
}

/// Real roots of a univariate polynomial given by its coefficients (constant
/// term first), ascending. Roots of even multiplicity may be missed.
pub fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    let mut c = coeffs.to_vec();
    while c.len() > 1 && c[c.len() - 1] == 0.0 {
        c.pop();
    }
    let deg = c.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    let lead = c[deg];
    let bound = 1.0 + c[..deg].iter().map(|a| (a / lead).abs()).fold(0.0, f64::max);
    let eval = |x: f64| c.iter().rev().fold(0.0, |acc, a| acc * x + a);
    let deriv: Vec<f64> = (1..=deg).map(|i| c[i] * i as f64).collect();
    let mut fences = vec![-bound];
    fences.extend(real_roots(&deriv).into_iter().filter(|r| r.abs() < bound));
    fences.push(bound);
    let mut roots = Vec::new();
    for w in fences.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let (flo, fhi) = (eval(lo), eval(hi));
        if flo == 0.0 {
            if roots.last() != Some(&lo) {
                roots.push(lo);
            }
            continue;
        }
        if flo.signum() == fhi.signum() {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if eval(mid).signum() == flo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    if eval(bound) == 0.0 {
        roots.push(bound);
    }
    roots
}

fn sexpr_f64(e: &SExpr) -> Option<f64> {
    if let Some(r) = sexpr_rational(e) {
        return r.to_f64();
    }
    let SExpr::List(items) = e else { return None };
    match items.as_slice() {
        [SExpr::Atom(head), poly, SExpr::Atom(idx)] if head == "root-obj" => {
            let ctx = VarContext::new(&["x"]).ok()?;
            let p = sexpr_to_polynomial(poly, &ctx).ok()?;
            let deg = p.total_degree()? as usize;
            let mut coeffs = vec![0.0; deg + 1];
            for (m, c) in p.terms() {
                coeffs[m.0[0] as usize] = c.to_f64()?;
            }
            let k: usize = idx.parse().ok()?;
            real_roots(&coeffs).get(k.checked_sub(1)?).copied()
        }
        [SExpr::Atom(head), a] if head == "-" => sexpr_f64(a).map(|v| -v),
        _ => None,
    }
}

/// Float approximation of a solver model, including algebraic numbers
/// written as `(root-obj p k)`, the `k`-th real root of `p`.
pub fn model_point_f64(model: &str, ctx: &VarContext) -> Option<Vec<f64>> {
    let exprs = parse_sexprs(model).ok()?;
    let model = exprs.iter().find(|e| is_model(e))?;
    let SExpr::List(items) = model else { return None };
    let mut point = vec![0.0; ctx.dim()];
    for d in items {
        let SExpr::List(xs) = d else { continue };
        if xs.len() != 5 {
            continue;
        }
        let SExpr::Atom(name) = &xs[1] else { continue };
        if let Some(i) = ctx.index_of(unquote(name)) {
            point[i] = sexpr_f64(&xs[4])?;
        }
    }
    Some(point)
}

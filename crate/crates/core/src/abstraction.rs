//! Discrete abstraction over sign-condition cells of a polynomial list.

use std::fmt::Write as _;

use num_traits::ToPrimitive;
use rand::Rng;
use thiserror::Error;

use crate::falsify::{rk4_step, sample_points, IntegratorConfig};
use crate::formula::Formula;
use crate::invariance::{Answer, CheckError, Checker, QueryStats};
use crate::lie::VectorField;
use crate::poly::{Polynomial, Rational, VarContext};
use crate::qe::{QeError, SatBackend, SatStatus};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AbstractionError {
    #[error("at least one polynomial is required")]
    NoPolynomials,
    #[error("too many polynomials ({0}); sign vectors are enumerated exhaustively")]
    TooManyPolynomials(usize),
    #[error("satisfiability of cell `{0}` is unknown")]
    UnknownCell(String),
    #[error(transparent)]
    Qe(#[from] QeError),
    #[error(transparent)]
    Check(#[from] CheckError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Neg,
    Zero,
    Pos,
}

impl Sign {
    fn symbol(self) -> &'static str {
        match self {
            Sign::Neg => "<",
            Sign::Zero => "=",
            Sign::Pos => ">",
        }
    }
}

pub fn sign_condition(p: &Polynomial, s: Sign) -> Formula {
    match s {
        Sign::Neg => Formula::lt(p.clone()),
        Sign::Zero => Formula::eq(p.clone()),
        Sign::Pos => Formula::lt(-p),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub signs: Vec<Sign>,
    pub formula: Formula,
    pub label: String,
    /// A rational point of the cell reported by the solver, if any.
    pub sample: Option<Vec<Rational>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Definite,
    /// The invariance query was inconclusive; kept for soundness.
    Possible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbstractionGraph {
    pub polynomials: Vec<Polynomial>,
    pub cells: Vec<Cell>,
    pub edges: Vec<Edge>,
    /// Accumulated over all edge checks.
    pub stats: QueryStats,
}

const MAX_POLYNOMIALS: usize = 8;

/// All satisfiable sign vectors, first polynomial most significant, in the
/// order `<`, `=`, `>`.
pub fn build_cells(
    polys: &[Polynomial],
    ctx: &VarContext,
    backend: &dyn SatBackend,
) -> Result<Vec<Cell>, AbstractionError> {
    if polys.is_empty() {
        return Err(AbstractionError::NoPolynomials);
    }
    if polys.len() > MAX_POLYNOMIALS {
        return Err(AbstractionError::TooManyPolynomials(polys.len()));
    }
    let k = polys.len();
    let mut cells = Vec::new();
    for code in 0..3usize.pow(k as u32) {
        let signs: Vec<Sign> = (0..k)
            .map(|i| match (code / 3usize.pow((k - 1 - i) as u32)) % 3 {
                0 => Sign::Neg,
                1 => Sign::Zero,
                _ => Sign::Pos,
            })
            .collect();
        let formula = Formula::conj(polys.iter().zip(&signs).map(|(p, s)| sign_condition(p, *s)));
        let label =
            polys.iter().zip(&signs).map(|(p, s)| format!("{p} {} 0", s.symbol())).collect::<Vec<_>>().join(" && ");
        let r = backend.check_sat(&formula, ctx)?;
        match r.status {
            SatStatus::Sat => cells.push(Cell { signs, formula, label, sample: r.model }),
            SatStatus::Unsat => {}
            SatStatus::Unknown => return Err(AbstractionError::UnknownCell(label)),
        }
    }
    Ok(cells)
}

/// Edge `i → j` is absent exactly when cell `i` is a continuous invariant
/// under the constraint `S_i ∨ S_j`. Every cell carries a self-loop.
pub fn build_transitions(
    polys: &[Polynomial],
    cells: Vec<Cell>,
    checker: &Checker<'_>,
) -> Result<AbstractionGraph, AbstractionError> {
    let mut edges = Vec::new();
    let mut stats = QueryStats::default();
    for i in 0..cells.len() {
        for j in 0..cells.len() {
            if i == j {
                edges.push(Edge { from: i, to: j, kind: EdgeKind::Definite });
                continue;
            }
            let q = Formula::or(cells[i].formula.clone(), cells[j].formula.clone());
            let v = checker.lzz_check_constrained(&cells[i].formula, &q)?;
            stats.merge(&v.stats);
            match v.answer {
                Answer::Invariant => {}
                Answer::NotInvariant => edges.push(Edge { from: i, to: j, kind: EdgeKind::Definite }),
                Answer::Unknown => edges.push(Edge { from: i, to: j, kind: EdgeKind::Possible }),
            }
        }
    }
    Ok(AbstractionGraph { polynomials: polys.to_vec(), cells, edges, stats })
}

pub fn abstraction(
    polys: &[Polynomial],
    checker: &Checker<'_>,
    backend: &dyn SatBackend,
) -> Result<AbstractionGraph, AbstractionError> {
    let cells = build_cells(polys, checker.context(), backend)?;
    build_transitions(polys, cells, checker)
}

impl AbstractionGraph {
    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges.iter().any(|e| e.from == from && e.to == to)
    }

    pub fn cell_index(&self, label: &str) -> Option<usize> {
        self.cells.iter().position(|c| c.label == label)
    }

    /// Non-loop pairs without an edge.
    pub fn absent_edges(&self) -> Vec<(usize, usize)> {
        let n = self.cells.len();
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| i != j && !self.has_edge(i, j)).collect()
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = String::from("# cells\n");
        for (i, c) in self.cells.iter().enumerate() {
            let _ = writeln!(out, "{i}: {}", c.label);
        }
        out.push_str("# edges\n");
        for e in &self.edges {
            let _ = match e.kind {
                EdgeKind::Definite => writeln!(out, "{} -> {}", e.from, e.to),
                EdgeKind::Possible => writeln!(out, "{} -> {} possible", e.from, e.to),
            };
        }
        out
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph abstraction {\n");
        for (i, c) in self.cells.iter().enumerate() {
            let _ = writeln!(out, "  c{i} [label=\"{}\"];", c.label.replace('"', "\\\""));
        }
        for e in &self.edges {
            let style = if e.kind == EdgeKind::Possible { " [style=dashed]" } else { "" };
            let _ = writeln!(out, "  c{} -> c{}{style};", e.from, e.to);
        }
        out.push_str("}\n");
        out
    }
}

/// A sampled trajectory that moved from cell `from` into cell `to` without
/// leaving their union, although the edge was declared absent.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeViolation {
    pub from: usize,
    pub to: usize,
    pub start: Vec<f64>,
    pub time: f64,
}

fn lands_without_leaving(
    x0: &[f64],
    si: &Formula,
    sj: &Formula,
    f: &VectorField,
    cfg: &IntegratorConfig,
) -> Option<f64> {
    let steps = (cfg.horizon / cfg.step).ceil() as usize;
    let mut x = x0.to_vec();
    for n in 1..=steps {
        let next = rk4_step(f, &x, cfg.step);
        if next.iter().any(|v| !v.is_finite()) {
            return None;
        }
        if si.evaluate_f64(&next, cfg.eps) {
            x = next;
            continue;
        }
        if !sj.evaluate_f64(&next, cfg.eps) {
            return None;
        }
        // a single step jumped from S_i into S_j; bisect it to see whether
        // the trajectory passes outside the union in between
        let (mut a, mut tau) = (x.clone(), cfg.step);
        for _ in 0..60 {
            tau /= 2.0;
            let mid = rk4_step(f, &a, tau);
            if si.evaluate_f64(&mid, cfg.eps) {
                a = mid;
            } else if !sj.evaluate_f64(&mid, cfg.eps) {
                return None;
            }
        }
        return Some(n as f64 * cfg.step);
    }
    None
}

/// Numerical check of every absent edge from sampled states of the source
/// cell (its solver sample plus rejection samples in `[-radius, radius]^n`).
pub fn soundness_probe<R: Rng>(
    graph: &AbstractionGraph,
    f: &VectorField,
    cfg: &IntegratorConfig,
    radius: f64,
    rng: &mut R,
) -> Vec<ProbeViolation> {
    let mut out = Vec::new();
    for (i, j) in graph.absent_edges() {
        let cell = &graph.cells[i];
        let mut starts = sample_points(&cell.formula, f.dim(), radius, cfg.samples, cfg.eps, rng);
        if let Some(p) = &cell.sample {
            starts.push(p.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect());
        }
        for x0 in starts {
            if let Some(time) = lands_without_leaving(&x0, &cell.formula, &graph.cells[j].formula, f, cfg) {
                out.push(ProbeViolation { from: i, to: j, start: x0, time });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_polynomial;

    #[test]
    fn sign_conditions() {
        let c = VarContext::new(&["x"]).unwrap();
        let x = parse_polynomial("x", &c).unwrap();
        assert_eq!(sign_condition(&x, Sign::Pos), Formula::lt(-&x));
        assert_eq!(sign_condition(&x, Sign::Zero), Formula::eq(x.clone()));
    }

    #[test]
    fn exports() {
        let c = VarContext::new(&["x"]).unwrap();
        let x = parse_polynomial("x", &c).unwrap();
        let cell = |s: Sign, label: &str| Cell {
            signs: vec![s],
            formula: sign_condition(&x, s),
            label: label.into(),
            sample: None,
        };
        let g = AbstractionGraph {
            polynomials: vec![x.clone()],
            cells: vec![cell(Sign::Neg, "x < 0"), cell(Sign::Zero, "x = 0")],
            edges: vec![
                Edge { from: 0, to: 0, kind: EdgeKind::Definite },
                Edge { from: 0, to: 1, kind: EdgeKind::Possible },
            ],
            stats: QueryStats::default(),
        };
        assert_eq!(g.to_edge_list(), "# cells\n0: x < 0\n1: x = 0\n# edges\n0 -> 0\n0 -> 1 possible\n");
        assert_eq!(
            g.to_dot(),
            "digraph abstraction {\n  c0 [label=\"x < 0\"];\n  c1 [label=\"x = 0\"];\n  c0 -> c0;\n  c0 -> c1 [style=dashed];\n}\n"
        );
        assert_eq!(g.absent_edges(), vec![(1, 0)]);
    }
}

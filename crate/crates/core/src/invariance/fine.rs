//! Fine-granularity decomposition of `Exit_f(S) ∪ Exit_{-f}(S^c)` into
//! basic semi-algebraic sets for inputs in DNF or CNF.
//!
//! Each atom and each negated atom is a single sign condition
//! `p ⋈ 0` with `⋈ ∈ {<, ≤, =, ≠}`, and the In/Exit sets of a sign
//! condition are unions of conjunctions of sign conditions on its
//! remainder sequence. Distributing those unions gives the chunks.

use std::fmt;

use crate::formula::{Atom, Formula};
use crate::lie::{LieError, RemainderCache};
use crate::poly::Polynomial;

use super::{CheckError, Direction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rel {
    Lt,
    Le,
    Eq,
    Ne,
}

/// Sign condition `poly ⋈ 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Literal {
    pub rel: Rel,
    pub poly: Polynomial,
}

impl Literal {
    pub fn new(rel: Rel, poly: Polynomial) -> Self {
        Literal { rel, poly }
    }

    fn from_atom(a: &Atom, proto: &Polynomial) -> Literal {
        let ctx = proto.context();
        match a {
            Atom::True => Literal::new(Rel::Eq, Polynomial::zero(ctx)),
            Atom::False => Literal::new(Rel::Eq, Polynomial::one(ctx)),
            Atom::Lt(p) => Literal::new(Rel::Lt, p.clone()),
            Atom::Eq(p) => Literal::new(Rel::Eq, p.clone()),
        }
    }

    /// Complement as a single sign condition.
    pub fn negated(&self) -> Literal {
        match self.rel {
            Rel::Lt => Literal::new(Rel::Le, -&self.poly),
            Rel::Le => Literal::new(Rel::Lt, -&self.poly),
            Rel::Eq => Literal::new(Rel::Ne, self.poly.clone()),
            Rel::Ne => Literal::new(Rel::Eq, self.poly.clone()),
        }
    }

    pub fn to_formula(&self) -> Formula {
        let p = self.poly.clone();
        match self.rel {
            Rel::Lt => Formula::lt(p),
            Rel::Le => Formula::le(p),
            Rel::Eq => Formula::eq(p),
            Rel::Ne => Formula::ne(p),
        }
    }

    fn constant_truth(&self) -> Option<bool> {
        let c = self.poly.as_constant()?;
        let zero = num_traits::Zero::zero();
        Some(match self.rel {
            Rel::Lt => c < zero,
            Rel::Le => c <= zero,
            Rel::Eq => c == zero,
            Rel::Ne => c != zero,
        })
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.rel {
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Eq => "=",
            Rel::Ne => "!=",
        };
        write!(f, "{} {op} 0", self.poly)
    }
}

type Basic = Vec<Literal>;

/// Conjunction `r_0 = 0 ∧ … ∧ r_{j-1} = 0 ∧ (r_j ⋈ 0)`.
fn prefix(rems: &[Polynomial], j: usize, last: Literal) -> Basic {
    rems[..j].iter().map(|r| Literal::new(Rel::Eq, r.clone())).chain(std::iter::once(last)).collect()
}

fn in_sets(l: &Literal, cache: &RemainderCache) -> Result<Vec<Basic>, LieError> {
    let seq = cache.get(&l.poly)?;
    let rems = &seq.remainders;
    let d = seq.order;
    Ok(match l.rel {
        Rel::Lt => (0..=d).map(|j| prefix(rems, j, Literal::new(Rel::Lt, rems[j].clone()))).collect(),
        Rel::Eq => vec![rems.iter().map(|r| Literal::new(Rel::Eq, r.clone())).collect()],
        Rel::Le => (0..d)
            .map(|j| prefix(rems, j, Literal::new(Rel::Lt, rems[j].clone())))
            .chain(std::iter::once(prefix(rems, d, Literal::new(Rel::Le, rems[d].clone()))))
            .collect(),
        Rel::Ne => (0..=d).map(|j| prefix(rems, j, Literal::new(Rel::Ne, rems[j].clone()))).collect(),
    })
}

fn exit_sets(l: &Literal, cache: &RemainderCache) -> Result<Vec<Basic>, LieError> {
    let seq = cache.get(&l.poly)?;
    let rems = &seq.remainders;
    let d = seq.order;
    Ok(match l.rel {
        Rel::Lt | Rel::Ne => Vec::new(),
        Rel::Eq => (1..=d).map(|j| prefix(rems, j, Literal::new(Rel::Ne, rems[j].clone()))).collect(),
        Rel::Le => (1..=d).map(|j| prefix(rems, j, Literal::new(Rel::Lt, -&rems[j]))).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeKind {
    /// `⋁_i ⋀_j L_ij`
    Dnf,
    /// `⋀_i ⋁_j L_ij`
    Cnf,
}

/// A formula read as a normal form over atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shape {
    pub kind: ShapeKind,
    pub clauses: Vec<Vec<Literal>>,
}

fn flatten<'a>(s: &'a Formula, conj: bool, out: &mut Vec<&'a Formula>) {
    match s {
        Formula::And(a, b) if conj => {
            flatten(a, conj, out);
            flatten(b, conj, out);
        }
        Formula::Or(a, b) if !conj => {
            flatten(a, conj, out);
            flatten(b, conj, out);
        }
        other => out.push(other),
    }
}

impl Shape {
    /// Reads `s` as DNF, else as CNF. Formulas with `Not` nodes or deeper
    /// nesting have no shape.
    pub fn of(s: &Formula) -> Option<Shape> {
        let proto = s.atoms().into_iter().find_map(|a| a.polynomial().cloned())?;
        for (kind, outer_conj) in [(ShapeKind::Dnf, false), (ShapeKind::Cnf, true)] {
            let mut outer = Vec::new();
            flatten(s, outer_conj, &mut outer);
            let mut clauses = Vec::new();
            for c in outer {
                let mut inner = Vec::new();
                flatten(c, !outer_conj, &mut inner);
                let lits: Option<Vec<Literal>> =
                    inner.iter().map(|f| f.as_atom().map(|a| Literal::from_atom(a, &proto))).collect();
                match lits {
                    Some(l) => clauses.push(l),
                    None => break,
                }
            }
            let mut outer_len = Vec::new();
            flatten(s, outer_conj, &mut outer_len);
            if clauses.len() == outer_len.len() {
                return Some(Shape { kind, clauses });
            }
        }
        None
    }

    pub fn k(&self) -> usize {
        self.clauses.len()
    }

    pub fn m(&self) -> usize {
        self.clauses.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// `k · m^k · ρ · (ρ+1)^{k-1}`, saturating.
pub fn chunk_bound(k: usize, m: usize, rho: usize) -> u128 {
    if k == 0 {
        return 0;
    }
    let pow = |b: u128, e: usize| (0..e).fold(1u128, |acc, _| acc.saturating_mul(b));
    (k as u128)
        .saturating_mul(pow(m as u128, k))
        .saturating_mul(rho as u128)
        .saturating_mul(pow(rho as u128 + 1, k - 1))
}

/// One basic semi-algebraic set of the decomposition, tagged with the flow
/// whose exit set it belongs to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chunk {
    pub side: Direction,
    pub literals: Vec<Literal>,
}

impl Chunk {
    pub fn formula(&self) -> Formula {
        Formula::conj(self.literals.iter().map(Literal::to_formula))
    }
}

/// Alternatives for one conjunct of a chunk template.
type Factor = Vec<Basic>;

fn singletons(lits: impl IntoIterator<Item = Literal>) -> Factor {
    lits.into_iter().map(|l| vec![l]).collect()
}

fn union_of(parts: Vec<Factor>) -> Factor {
    parts.into_iter().flatten().collect()
}

fn template_size(factors: &[Factor]) -> u128 {
    factors.iter().fold(1u128, |acc, f| acc.saturating_mul(f.len() as u128))
}

fn expand(side: Direction, factors: &[Factor], out: &mut Vec<Chunk>) {
    fn rec(side: Direction, factors: &[Factor], acc: &mut Basic, out: &mut Vec<Chunk>) {
        let Some((first, rest)) = factors.split_first() else {
            out.push(Chunk { side, literals: acc.clone() });
            return;
        };
        for alt in first {
            let mark = acc.len();
            let mut dead = false;
            for l in alt {
                match l.constant_truth() {
                    Some(true) => {}
                    Some(false) => dead = true,
                    None => acc.push(l.clone()),
                }
            }
            if !dead {
                rec(side, rest, acc, out);
            }
            acc.truncate(mark);
        }
    }
    rec(side, factors, &mut Vec::new(), out);
}

pub(super) fn fine_split(
    s: &Formula,
    fwd: &RemainderCache,
    bwd: &RemainderCache,
    cap: u128,
) -> Result<Vec<Chunk>, CheckError> {
    let shape = Shape::of(s).ok_or(CheckError::NotNormalForm)?;
    let cl = &shape.clauses;
    let mut templates: Vec<(Direction, Vec<Factor>)> = Vec::new();
    for r in 0..cl.len() {
        for s_idx in 0..cl[r].len() {
            let lit = &cl[r][s_idx];
            let others = || cl[r].iter().enumerate().filter(move |(j, _)| *j != s_idx).map(|(_, l)| l);
            let rest = || cl.iter().enumerate().filter(move |(i, _)| *i != r).map(|(_, c)| c);
            let mut f_side = vec![exit_sets(lit, fwd)?];
            let mut b_side = vec![exit_sets(&lit.negated(), bwd)?];
            match shape.kind {
                ShapeKind::Dnf => {
                    for l in others() {
                        f_side.push(singletons([l.clone()]));
                        b_side.push(in_sets(l, bwd)?);
                    }
                    for c in rest() {
                        let parts: Result<Vec<Factor>, LieError> =
                            c.iter().map(|l| in_sets(&l.negated(), fwd)).collect();
                        f_side.push(union_of(parts?));
                        b_side.push(singletons(c.iter().map(Literal::negated)));
                    }
                }
                ShapeKind::Cnf => {
                    for l in others() {
                        f_side.push(in_sets(&l.negated(), fwd)?);
                        b_side.push(singletons([l.negated()]));
                    }
                    for c in rest() {
                        f_side.push(singletons(c.iter().cloned()));
                        let parts: Result<Vec<Factor>, LieError> = c.iter().map(|l| in_sets(l, bwd)).collect();
                        b_side.push(union_of(parts?));
                    }
                }
            }
            templates.push((Direction::Forward, f_side));
            templates.push((Direction::Backward, b_side));
        }
    }
    let total = templates.iter().fold(0u128, |acc, (_, f)| acc.saturating_add(template_size(f)));
    if total > cap {
        return Err(CheckError::TooManyChunks { count: total, cap });
    }
    let mut out = Vec::new();
    for (side, factors) in &templates {
        expand(*side, factors, &mut out);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{VectorField, DEFAULT_ITERATION_CAP};
    use crate::parse::{parse_formula, parse_polynomial};
    use crate::poly::VarContext;

    fn caches(ctx: &VarContext, comps: &[&str]) -> (RemainderCache, RemainderCache) {
        let f = VectorField::new(ctx, comps.iter().map(|c| parse_polynomial(c, ctx).unwrap()).collect()).unwrap();
        (RemainderCache::new(f.clone(), DEFAULT_ITERATION_CAP), RemainderCache::new(f.reverse(), DEFAULT_ITERATION_CAP))
    }

    #[test]
    fn open_atom_under_contraction_has_no_chunks() {
        let c1 = VarContext::new(&["x"]).unwrap();
        let (f, b) = caches(&c1, &["-x"]);
        let s = parse_formula("x < 0", &c1).unwrap();
        assert!(fine_split(&s, &f, &b, 1000).unwrap().is_empty());
    }

    #[test]
    fn worked_union_has_six_sets() {
        // Exit_f(p1 = 0) ∧ p2 < 0 ∧ In_f(q < 0), ord(p1) = ord(q) = 2
        let c3 = VarContext::new(&["x", "y", "z"]).unwrap();
        let (f, _) = caches(&c3, &["y", "z", "0"]);
        let p = |s: &str| parse_polynomial(s, &c3).unwrap();
        assert_eq!(f.get(&p("x")).unwrap().order, 2);
        assert_eq!(f.get(&p("x + z")).unwrap().order, 2);
        let factors = vec![
            exit_sets(&Literal::new(Rel::Eq, p("x")), &f).unwrap(),
            singletons([Literal::new(Rel::Lt, p("y - 1"))]),
            in_sets(&Literal::new(Rel::Lt, p("x + z")), &f).unwrap(),
        ];
        assert_eq!(template_size(&factors), 6);
        let mut out = Vec::new();
        expand(Direction::Forward, &factors, &mut out);
        assert_eq!(out.len(), 6);
        assert_eq!(out[0].formula().to_string(), "(((x = 0 && (-y < 0 || y < 0)) && y - 1 < 0) && x + z < 0)");
    }

    #[test]
    fn shapes() {
        let c2 = VarContext::new(&["x", "y"]).unwrap();
        let f = |t: &str| parse_formula(t, &c2).unwrap();
        let s = Shape::of(&f("(x < 0 && y = 0) || x = 1")).unwrap();
        assert_eq!((s.kind, s.k(), s.m()), (ShapeKind::Dnf, 2, 2));
        let s = Shape::of(&f("x <= 0 && y <= 0")).unwrap();
        assert_eq!((s.kind, s.k(), s.m()), (ShapeKind::Cnf, 2, 2));
        let s = Shape::of(&f("x < 0 && y < 0")).unwrap();
        assert_eq!((s.kind, s.k(), s.m()), (ShapeKind::Dnf, 1, 2));
        assert!(Shape::of(&f("!(x < 0)")).is_none());
        assert!(Shape::of(&f("(x < 0 || (y < 0 && x = 0)) && y = 1")).is_none());
    }

    #[test]
    fn negation_table() {
        let c1 = VarContext::new(&["x"]).unwrap();
        let x = parse_polynomial("x", &c1).unwrap();
        let l = Literal::new(Rel::Lt, x.clone());
        assert_eq!(l.negated(), Literal::new(Rel::Le, -&x));
        assert_eq!(l.negated().negated(), l);
        assert_eq!(Literal::new(Rel::Eq, x.clone()).negated().rel, Rel::Ne);
    }

    #[test]
    fn bound_formula() {
        assert_eq!(chunk_bound(1, 1, 1), 1);
        assert_eq!(chunk_bound(2, 2, 1), 16);
        assert_eq!(chunk_bound(1, 2, 0), 0);
        assert_eq!(chunk_bound(200, 9, 9), u128::MAX);
    }
}

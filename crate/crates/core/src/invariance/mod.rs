//! In/Exit formula constructions and the LZZ and ES decision procedures,
//! with and without an evolution constraint.

mod fine;

use std::fmt;
use std::time::Duration;

use thiserror::Error;

use crate::formula::{Atom, Formula};
use crate::lie::{LieError, RemainderCache, VectorField, DEFAULT_ITERATION_CAP};
use crate::poly::{PolyError, Rational, VarContext};
use crate::qe::{QeError, SatBackend, SatStatus};

pub use fine::{chunk_bound, Chunk, Literal, Rel, Shape, ShapeKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Qe(#[from] QeError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("formula is not in disjunctive or conjunctive normal form over atoms")]
    NotNormalForm,
    #[error("fine splitting would produce {count} chunks, above the limit of {cap}")]
    TooManyChunks { count: u128, cap: u128 },
}

/// Which flow a construction refers to: `f` or the reversed `-f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Backward,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Answer {
    Invariant,
    NotInvariant,
    Unknown,
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Answer::Invariant => "invariant",
            Answer::NotInvariant => "not-invariant",
            Answer::Unknown => "unknown",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Lzz,
    Es,
    EsFine,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Lzz => "lzz",
            Method::Es => "es",
            Method::EsFine => "es-fine",
        })
    }
}

/// A state from which invariance fails.
///
/// A forward witness lies in `Exit_f(S)`, a backward one in `Exit_{-f}(S^c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub point: Option<Vec<Rational>>,
    pub symbolic: Option<String>,
    pub branch: Direction,
    /// Result of exact re-evaluation of the exit formula; `None` when the
    /// point is not rational.
    pub validated: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueryStats {
    pub reduce_calls: usize,
    pub syntactic_skips: usize,
    pub unknown_queries: usize,
    pub per_query_times: Vec<Duration>,
    pub k: Option<usize>,
    pub m: Option<usize>,
    pub rho: Option<usize>,
    pub chunks: Option<usize>,
}

impl QueryStats {
    pub fn merge(&mut self, other: &QueryStats) {
        self.reduce_calls += other.reduce_calls;
        self.syntactic_skips += other.syntactic_skips;
        self.unknown_queries += other.unknown_queries;
        self.per_query_times.extend(other.per_query_times.iter().copied());
    }

    pub fn total_query_time(&self) -> Duration {
        self.per_query_times.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub answer: Answer,
    pub witness: Option<Witness>,
    pub stats: QueryStats,
    pub method: Method,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOptions {
    /// Stop evaluating sibling branches once one is known to be nonempty.
    pub short_circuit: bool,
    /// Skip queries whose exit formula is syntactically `F`.
    pub syntactic_skip: bool,
    pub iteration_cap: usize,
    /// Upper limit on the number of fine-split chunks.
    pub chunk_cap: u128,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            short_circuit: true,
            syntactic_skip: true,
            iteration_cap: DEFAULT_ITERATION_CAP,
            chunk_cap: 100_000,
        }
    }
}

impl CheckOptions {
    pub fn strict() -> Self {
        CheckOptions { short_circuit: false, ..Self::default() }
    }
}

/// Outcome of a `NonEmpty` evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Emptiness {
    Empty,
    NonEmpty { point: Option<Vec<Rational>>, symbolic: Option<String> },
    Unknown,
}

impl Emptiness {
    pub fn is_nonempty(&self) -> bool {
        matches!(self, Emptiness::NonEmpty { .. })
    }
}

/// `In_f(S)` over the four atom kinds; negation uses the complement law.
pub fn in_f(s: &Formula, cache: &RemainderCache) -> Result<Formula, LieError> {
    Ok(match s {
        Formula::Atom(Atom::True) | Formula::Atom(Atom::False) => s.clone(),
        Formula::Atom(Atom::Lt(p)) => {
            let seq = cache.get(p)?;
            Formula::disj((0..=seq.order).map(|j| {
                Formula::conj(
                    seq.remainders[..j]
                        .iter()
                        .map(|r| Formula::eq(r.clone()))
                        .chain(std::iter::once(Formula::lt(seq.remainders[j].clone()))),
                )
            }))
        }
        Formula::Atom(Atom::Eq(p)) => {
            let seq = cache.get(p)?;
            Formula::conj(seq.remainders.iter().map(|r| Formula::eq(r.clone())))
        }
        Formula::And(a, b) => Formula::and(in_f(a, cache)?, in_f(b, cache)?),
        Formula::Or(a, b) => Formula::or(in_f(a, cache)?, in_f(b, cache)?),
        Formula::Not(a) => Formula::not(in_f(a, cache)?),
    })
}

/// `Exit_f(A)` for an atom. Only equalities with positive order have a
/// nonempty exit set.
pub fn exit_atom(a: &Atom, cache: &RemainderCache) -> Result<Formula, LieError> {
    Ok(match a {
        Atom::True | Atom::False | Atom::Lt(_) => Formula::ff(),
        Atom::Eq(p) => {
            let seq = cache.get(p)?;
            Formula::disj((1..=seq.order).map(|j| {
                Formula::conj(
                    seq.remainders[..j]
                        .iter()
                        .map(|r| Formula::eq(r.clone()))
                        .chain(std::iter::once(Formula::ne(seq.remainders[j].clone()))),
                )
            }))
        }
    })
}

/// Exit formula of a compound set, built from the atom exit sets.
pub fn exit_formula(s: &Formula, cache: &RemainderCache) -> Result<Formula, LieError> {
    Ok(match s {
        Formula::Atom(a) => exit_atom(a, cache)?,
        Formula::And(a, b) => Formula::or(
            Formula::and(exit_formula(a, cache)?, (**b).clone()),
            Formula::and((**a).clone(), exit_formula(b, cache)?),
        ),
        Formula::Or(a, b) => Formula::or(
            Formula::and(exit_formula(a, cache)?, Formula::not(in_f(b, cache)?)),
            Formula::and(Formula::not(in_f(a, cache)?), exit_formula(b, cache)?),
        ),
        Formula::Not(a) => exit_formula(&a.neg_step(), cache)?,
    })
}

/// Runs the decision procedures for one vector field and one backend.
pub struct Checker<'a> {
    ctx: VarContext,
    forward: RemainderCache,
    backward: RemainderCache,
    backend: &'a dyn SatBackend,
    options: CheckOptions,
}

impl<'a> Checker<'a> {
    pub fn new(field: &VectorField, backend: &'a dyn SatBackend, options: CheckOptions) -> Self {
        Checker {
            ctx: field.context().clone(),
            forward: RemainderCache::new(field.clone(), options.iteration_cap),
            backward: RemainderCache::new(field.reverse(), options.iteration_cap),
            backend,
            options,
        }
    }

    pub fn context(&self) -> &VarContext {
        &self.ctx
    }

    pub fn options(&self) -> &CheckOptions {
        &self.options
    }

    pub fn cache(&self, dir: Direction) -> &RemainderCache {
        match dir {
            Direction::Forward => &self.forward,
            Direction::Backward => &self.backward,
        }
    }

    pub fn field(&self, dir: Direction) -> &VectorField {
        self.cache(dir).field()
    }

    pub fn in_f(&self, s: &Formula, dir: Direction) -> Result<Formula, CheckError> {
        Ok(in_f(s, self.cache(dir))?)
    }

    pub fn exit_atom(&self, a: &Atom, dir: Direction) -> Result<Formula, CheckError> {
        Ok(exit_atom(a, self.cache(dir))?)
    }

    pub fn exit_formula(&self, s: &Formula, dir: Direction) -> Result<Formula, CheckError> {
        Ok(exit_formula(s, self.cache(dir))?)
    }

    fn query(&self, q: &Formula, stats: &mut QueryStats) -> Result<Emptiness, CheckError> {
        let r = self.backend.check_sat(q, &self.ctx)?;
        stats.reduce_calls += 1;
        stats.per_query_times.push(r.elapsed);
        Ok(match r.status {
            SatStatus::Sat => Emptiness::NonEmpty { point: r.model, symbolic: r.symbolic_model },
            SatStatus::Unsat => Emptiness::Empty,
            SatStatus::Unknown => {
                stats.unknown_queries += 1;
                Emptiness::Unknown
            }
        })
    }

    fn either<L, R>(&self, stats: &mut QueryStats, left: L, right: R) -> Result<Emptiness, CheckError>
    where
        L: FnOnce(&mut QueryStats) -> Result<Emptiness, CheckError>,
        R: FnOnce(&mut QueryStats) -> Result<Emptiness, CheckError>,
    {
        let l = left(stats)?;
        if l.is_nonempty() && self.options.short_circuit {
            return Ok(l);
        }
        let r = right(stats)?;
        Ok(match (l, r) {
            (l @ Emptiness::NonEmpty { .. }, _) => l,
            (_, r @ Emptiness::NonEmpty { .. }) => r,
            (Emptiness::Unknown, _) | (_, Emptiness::Unknown) => Emptiness::Unknown,
            _ => Emptiness::Empty,
        })
    }

    /// Decides whether `Exit(S) ∩ R` is nonempty for the flow `dir`.
    pub fn nonempty(
        &self,
        s: &Formula,
        r: &Formula,
        dir: Direction,
        stats: &mut QueryStats,
    ) -> Result<Emptiness, CheckError> {
        match s {
            Formula::Atom(a) => {
                let exit = self.exit_atom(a, dir)?;
                if exit.is_false() && self.options.syntactic_skip {
                    stats.syntactic_skips += 1;
                    return Ok(Emptiness::Empty);
                }
                self.query(&Formula::and(exit, r.clone()), stats)
            }
            Formula::And(a, b) => {
                let ra = Formula::and((**b).clone(), r.clone());
                let rb = Formula::and((**a).clone(), r.clone());
                self.either(stats, |st| self.nonempty(a, &ra, dir, st), |st| self.nonempty(b, &rb, dir, st))
            }
            Formula::Or(a, b) => {
                let ra = Formula::and(Formula::not(self.in_f(b, dir)?), r.clone());
                let rb = Formula::and(Formula::not(self.in_f(a, dir)?), r.clone());
                self.either(stats, |st| self.nonempty(a, &ra, dir, st), |st| self.nonempty(b, &rb, dir, st))
            }
            Formula::Not(a) => self.nonempty(&a.neg_step(), r, dir, stats),
        }
    }

    /// Structural metrics `k`, `m`, `rho` when `s` is in DNF or CNF.
    pub fn shape_metrics(&self, s: &Formula, stats: &mut QueryStats) -> Result<(), CheckError> {
        if let Some(shape) = Shape::of(s) {
            stats.k = Some(shape.k());
            stats.m = Some(shape.m());
            let mut rho = 0;
            for clause in &shape.clauses {
                for lit in clause {
                    rho = rho.max(self.forward.get(&lit.poly)?.order);
                }
            }
            stats.rho = Some(rho);
        }
        Ok(())
    }

    fn witness(
        &self,
        hit: Emptiness,
        branch: Direction,
        s: &Formula,
        r: &Formula,
    ) -> Result<Option<Witness>, CheckError> {
        let Emptiness::NonEmpty { point, symbolic } = hit else { return Ok(None) };
        let validated = match &point {
            Some(pt) => Some(self.validate_witness(pt, branch, s, r)?),
            None => None,
        };
        Ok(Some(Witness { point, symbolic, branch, validated }))
    }

    /// Exact check that `pt` lies in the exit set (intersected with the
    /// restriction `r`) of `s` for a forward witness, or of `¬s` under `-f`
    /// for a backward one.
    pub fn validate_witness(
        &self,
        pt: &[Rational],
        branch: Direction,
        s: &Formula,
        r: &Formula,
    ) -> Result<bool, CheckError> {
        let exit = match branch {
            Direction::Forward => self.exit_formula(s, Direction::Forward)?,
            Direction::Backward => self.exit_formula(&Formula::not(s.clone()), Direction::Backward)?,
        };
        Ok(Formula::and(exit, r.clone()).evaluate(pt)?)
    }

    fn verdict(
        &self,
        method: Method,
        results: Vec<(Emptiness, Direction, Formula)>,
        s: &Formula,
        stats: QueryStats,
    ) -> Result<Verdict, CheckError> {
        let mut unknown = false;
        for (hit, branch, r) in results {
            match hit {
                Emptiness::NonEmpty { .. } => {
                    let witness = self.witness(hit, branch, s, &r)?;
                    return Ok(Verdict { answer: Answer::NotInvariant, witness, stats, method });
                }
                Emptiness::Unknown => unknown = true,
                Emptiness::Empty => {}
            }
        }
        let answer = if unknown { Answer::Unknown } else { Answer::Invariant };
        Ok(Verdict { answer, witness: None, stats, method })
    }

    /// Constraint restriction `Q ∧ In(Q)` for the given flow; `T` without a
    /// constraint.
    fn restriction(&self, q: Option<&Formula>, dir: Direction) -> Result<Formula, CheckError> {
        match q {
            None => Ok(Formula::tt()),
            Some(q) if q.is_true() => Ok(Formula::tt()),
            Some(q) => Ok(Formula::and(q.clone(), self.in_f(q, dir)?)),
        }
    }

    fn es(&self, s: &Formula, q: Option<&Formula>) -> Result<Verdict, CheckError> {
        let mut stats = QueryStats::default();
        self.shape_metrics(s, &mut stats)?;
        let rf = self.restriction(q, Direction::Forward)?;
        let fwd = self.nonempty(s, &rf, Direction::Forward, &mut stats)?;
        let mut results = vec![(fwd, Direction::Forward, rf)];
        if !(results[0].0.is_nonempty() && self.options.short_circuit) {
            let rb = self.restriction(q, Direction::Backward)?;
            let bwd = self.nonempty(&Formula::not(s.clone()), &rb, Direction::Backward, &mut stats)?;
            results.push((bwd, Direction::Backward, rb));
        }
        self.verdict(Method::Es, results, s, stats)
    }

    fn lzz(&self, s: &Formula, q: Option<&Formula>) -> Result<Verdict, CheckError> {
        let mut stats = QueryStats::default();
        self.shape_metrics(s, &mut stats)?;
        let rf = self.restriction(q, Direction::Forward)?;
        let q1 = Formula::conj([s.clone(), rf.clone(), Formula::not(self.in_f(s, Direction::Forward)?)]);
        let fwd = self.query(&q1, &mut stats)?;
        let mut results = vec![(fwd, Direction::Forward, rf)];
        if !(results[0].0.is_nonempty() && self.options.short_circuit) {
            // ¬In_{-f}(¬S) = In_{-f}(S)
            let rb = self.restriction(q, Direction::Backward)?;
            let q2 = Formula::conj([Formula::not(s.clone()), rb.clone(), self.in_f(s, Direction::Backward)?]);
            let bwd = self.query(&q2, &mut stats)?;
            results.push((bwd, Direction::Backward, rb));
        }
        self.verdict(Method::Lzz, results, s, stats)
    }

    /// Exit-set check: invariant iff `Exit_f(S)` and `Exit_{-f}(S^c)` are
    /// both empty.
    pub fn es_check(&self, s: &Formula) -> Result<Verdict, CheckError> {
        self.es(s, None)
    }

    /// Real-induction check: `S ⊆ In_f(S)` and `S^c ⊆ In_{-f}(S^c)`.
    pub fn lzz_check(&self, s: &Formula) -> Result<Verdict, CheckError> {
        self.lzz(s, None)
    }

    /// Continuous invariance of `s` subject to the evolution constraint `q`.
    pub fn lzz_check_constrained(&self, s: &Formula, q: &Formula) -> Result<Verdict, CheckError> {
        self.lzz(s, Some(q))
    }

    /// ES variant of [`Checker::lzz_check_constrained`]: the constraint
    /// enters only through the restriction argument of `NonEmpty`.
    pub fn es_check_constrained(&self, s: &Formula, q: &Formula) -> Result<Verdict, CheckError> {
        self.es(s, Some(q))
    }

    /// ES check over the fine-split chunks, one query per basic set.
    pub fn es_check_fine(&self, s: &Formula, q: Option<&Formula>) -> Result<Verdict, CheckError> {
        let mut stats = QueryStats::default();
        self.shape_metrics(s, &mut stats)?;
        let chunks = self.fine_split(s)?;
        stats.chunks = Some(chunks.len());
        let rf = self.restriction(q, Direction::Forward)?;
        let rb = self.restriction(q, Direction::Backward)?;
        let mut results = Vec::new();
        for chunk in &chunks {
            let r = match chunk.side {
                Direction::Forward => &rf,
                Direction::Backward => &rb,
            };
            let hit = self.query(&Formula::and(chunk.formula(), r.clone()), &mut stats)?;
            let stop = hit.is_nonempty() && self.options.short_circuit;
            results.push((hit, chunk.side, r.clone()));
            if stop {
                break;
            }
        }
        let mut v = self.verdict(Method::EsFine, results, s, stats)?;
        v.method = Method::EsFine;
        Ok(v)
    }

    /// Basic semi-algebraic sets whose union is `Exit_f(S) ∪ Exit_{-f}(S^c)`.
    pub fn fine_split(&self, s: &Formula) -> Result<Vec<Chunk>, CheckError> {
        fine::fine_split(s, &self.forward, &self.backward, self.options.chunk_cap)
    }
}

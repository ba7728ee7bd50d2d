//! Quantifier-free semi-algebraic formulas.
//!
//! After parsing, the only atoms are `true`, `false`, `p < 0` and `p = 0`;
//! every other comparison is rewritten into these at parse time. The tree
//! keeps `Not` nodes as written; they are only pushed inward by
//! [`Formula::neg_step`].

use std::fmt;

use num_traits::{Signed, Zero};

use crate::poly::{PolyError, Polynomial, Rational, VarContext};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Atom {
    True,
    False,
    /// `p < 0`
    Lt(Polynomial),
    /// `p = 0`
    Eq(Polynomial),
}

impl Atom {
    pub fn polynomial(&self) -> Option<&Polynomial> {
        match self {
            Atom::Lt(p) | Atom::Eq(p) => Some(p),
            Atom::True | Atom::False => None,
        }
    }

    /// Truth value of an atom over a constant polynomial, if it is one.
    pub fn constant_value(&self) -> Option<bool> {
        match self {
            Atom::True => Some(true),
            Atom::False => Some(false),
            Atom::Lt(p) => p.as_constant().map(|c| c.is_negative()),
            Atom::Eq(p) => p.as_constant().map(|c| c.is_zero()),
        }
    }

    /// Sets described by `p < 0`, `true` and `false` are open.
    pub fn is_open(&self) -> bool {
        !matches!(self, Atom::Eq(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(Atom),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Not(Box<Formula>),
}

impl Formula {
    pub fn tt() -> Self {
        Formula::Atom(Atom::True)
    }

    pub fn ff() -> Self {
        Formula::Atom(Atom::False)
    }

    pub fn lt(p: Polynomial) -> Self {
        Formula::Atom(Atom::Lt(p))
    }

    pub fn eq(p: Polynomial) -> Self {
        Formula::Atom(Atom::Eq(p))
    }

    /// `p <= 0` as `p < 0 || p = 0`.
    pub fn le(p: Polynomial) -> Self {
        Formula::or(Formula::lt(p.clone()), Formula::eq(p))
    }

    /// `p > 0` as `-p < 0`.
    pub fn gt(p: Polynomial) -> Self {
        Formula::lt(-p)
    }

    /// `p >= 0` as `-p < 0 || -p = 0`.
    pub fn ge(p: Polynomial) -> Self {
        let n = -p;
        Formula::or(Formula::lt(n.clone()), Formula::eq(n))
    }

    /// `p != 0` as `-p < 0 || p < 0`.
    pub fn ne(p: Polynomial) -> Self {
        Formula::or(Formula::lt(-&p), Formula::lt(p))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Formula) -> Self {
        Formula::Not(Box::new(a))
    }

    /// Left-nested conjunction; the empty conjunction is `true`.
    pub fn conj<I: IntoIterator<Item = Formula>>(items: I) -> Self {
        items.into_iter().reduce(Formula::and).unwrap_or_else(Formula::tt)
    }

    /// Left-nested disjunction; the empty disjunction is `false`.
    pub fn disj<I: IntoIterator<Item = Formula>>(items: I) -> Self {
        items.into_iter().reduce(Formula::or).unwrap_or_else(Formula::ff)
    }

    pub fn as_atom(&self) -> Option<&Atom> {
        match self {
            Formula::Atom(a) => Some(a),
            _ => None,
        }
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Formula::Atom(Atom::False))
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Formula::Atom(Atom::True))
    }

    /// One negation step: atoms are negated into the four basic kinds,
    /// `And`/`Or` are swapped with their children wrapped in `Not`
    /// (not recursed), and a double negation is dropped.
    pub fn neg_step(&self) -> Formula {
        match self {
            Formula::Atom(Atom::True) => Formula::ff(),
            Formula::Atom(Atom::False) => Formula::tt(),
            Formula::Atom(Atom::Lt(p)) => {
                let n = -p;
                Formula::or(Formula::lt(n.clone()), Formula::eq(n))
            }
            Formula::Atom(Atom::Eq(p)) => Formula::or(Formula::lt(-p), Formula::lt(p.clone())),
            Formula::And(a, b) => Formula::or(Formula::not((**a).clone()), Formula::not((**b).clone())),
            Formula::Or(a, b) => Formula::and(Formula::not((**a).clone()), Formula::not((**b).clone())),
            Formula::Not(s) => (**s).clone(),
        }
    }

    /// Full negation with no `Not` nodes left, obtained by applying
    /// [`Formula::neg_step`] until only atoms remain below the connectives.
    pub fn negated(&self) -> Formula {
        self.neg_step().without_not()
    }

    /// Eliminates every `Not` node via repeated negation steps.
    pub fn without_not(&self) -> Formula {
        match self {
            Formula::Atom(_) => self.clone(),
            Formula::And(a, b) => Formula::and(a.without_not(), b.without_not()),
            Formula::Or(a, b) => Formula::or(a.without_not(), b.without_not()),
            Formula::Not(s) => s.negated(),
        }
    }

    /// Exact truth value at a rational point.
    pub fn evaluate(&self, point: &[Rational]) -> Result<bool, PolyError> {
        Ok(match self {
            Formula::Atom(Atom::True) => true,
            Formula::Atom(Atom::False) => false,
            Formula::Atom(Atom::Lt(p)) => p.eval(point)?.is_negative(),
            Formula::Atom(Atom::Eq(p)) => p.eval(point)?.is_zero(),
            Formula::And(a, b) => a.evaluate(point)? && b.evaluate(point)?,
            Formula::Or(a, b) => a.evaluate(point)? || b.evaluate(point)?,
            Formula::Not(s) => !s.evaluate(point)?,
        })
    }

    /// Floating-point truth value; values within `eps` of zero count as zero.
    pub fn evaluate_f64(&self, point: &[f64], eps: f64) -> bool {
        match self {
            Formula::Atom(Atom::True) => true,
            Formula::Atom(Atom::False) => false,
            Formula::Atom(Atom::Lt(p)) => p.eval_f64(point) < -eps,
            Formula::Atom(Atom::Eq(p)) => p.eval_f64(point).abs() <= eps,
            Formula::And(a, b) => a.evaluate_f64(point, eps) && b.evaluate_f64(point, eps),
            Formula::Or(a, b) => a.evaluate_f64(point, eps) || b.evaluate_f64(point, eps),
            Formula::Not(s) => !s.evaluate_f64(point, eps),
        }
    }

    /// Atom occurrences in left-to-right order.
    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            Formula::Atom(a) => out.push(a),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            Formula::Not(s) => s.collect_atoms(out),
        }
    }

    pub fn atom_count(&self) -> usize {
        self.atoms().len()
    }

    /// Number of distinct atoms.
    pub fn distinct_atom_count(&self) -> usize {
        let mut seen: Vec<&Atom> = Vec::new();
        for a in self.atoms() {
            if !seen.contains(&a) {
                seen.push(a);
            }
        }
        seen.len()
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Atom(_) => 1,
            Formula::And(a, b) | Formula::Or(a, b) => 1 + a.depth().max(b.depth()),
            Formula::Not(s) => 1 + s.depth(),
        }
    }

    /// Context of the first polynomial in the formula, if any.
    pub fn context(&self) -> Option<&VarContext> {
        self.atoms().into_iter().find_map(|a| a.polynomial()).map(|p| p.context())
    }

    /// Replaces atoms over constant polynomials by `true`/`false`.
    pub fn fold_constants(&self) -> Formula {
        match self {
            Formula::Atom(a) => match a.constant_value() {
                Some(true) => Formula::tt(),
                Some(false) => Formula::ff(),
                None => self.clone(),
            },
            Formula::And(a, b) => Formula::and(a.fold_constants(), b.fold_constants()),
            Formula::Or(a, b) => Formula::or(a.fold_constants(), b.fold_constants()),
            Formula::Not(s) => Formula::not(s.fold_constants()),
        }
    }

    /// Removes `true`/`false` units bottom-up. Nothing else is rewritten.
    pub fn simplify(&self) -> Formula {
        match self {
            Formula::Atom(_) => self.clone(),
            Formula::And(a, b) => {
                let (a, b) = (a.simplify(), b.simplify());
                if a.is_false() || b.is_false() {
                    Formula::ff()
                } else if a.is_true() {
                    b
                } else if b.is_true() {
                    a
                } else {
                    Formula::and(a, b)
                }
            }
            Formula::Or(a, b) => {
                let (a, b) = (a.simplify(), b.simplify());
                if a.is_true() || b.is_true() {
                    Formula::tt()
                } else if a.is_false() {
                    b
                } else if b.is_false() {
                    a
                } else {
                    Formula::or(a, b)
                }
            }
            Formula::Not(s) => {
                let s = s.simplify();
                if s.is_true() {
                    Formula::ff()
                } else if s.is_false() {
                    Formula::tt()
                } else {
                    Formula::not(s)
                }
            }
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::True => write!(f, "true"),
            Atom::False => write!(f, "false"),
            Atom::Lt(p) => write!(f, "{p} < 0"),
            Atom::Eq(p) => write!(f, "{p} = 0"),
        }
    }
}

/// Fully parenthesized, so that parsing the output gives back the same tree.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::And(a, b) => write!(f, "({a} && {b})"),
            Formula::Or(a, b) => write!(f, "({a} || {b})"),
            Formula::Not(s) => write!(f, "!({s})"),
        }
    }
}

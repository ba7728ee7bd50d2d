//! Exact multivariate polynomials over the rationals.
//!
//! Every polynomial carries the [`VarContext`] it was built in. The context
//! fixes the variable names, their precedence, and the monomial order used to
//! sort terms, so two polynomials in the same context compare equal exactly
//! when their (sorted, zero-free) term lists agree.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational coefficient. Always kept in lowest terms with a positive
/// denominator; zero is `0/1`.
pub type Rational = BigRational;

/// Builds the rational `num/den`. Panics when `den` is zero.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Builds an integer-valued rational.
pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("polynomials belong to different variable contexts")]
    ContextMismatch,
    #[error("variable index {index} out of range for a context of dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("point has dimension {got}, context has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid variable context: {0}")]
    InvalidContext(String),
}

/// Admissible monomial orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum MonomialOrder {
    /// Graded reverse lexicographic.
    #[default]
    Grevlex,
    /// Pure lexicographic, `x_1 > x_2 > ... > x_n`.
    Lex,
}

impl MonomialOrder {
    pub fn compare(self, a: &Monomial, b: &Monomial) -> Ordering {
        match self {
            MonomialOrder::Lex => a.0.cmp(&b.0),
            MonomialOrder::Grevlex => a.total_degree().cmp(&b.total_degree()).then_with(|| {
                // the smaller exponent in the last differing variable wins
                for (x, y) in a.0.iter().zip(b.0.iter()).rev() {
                    if x != y {
                        return y.cmp(x);
                    }
                }
                Ordering::Equal
            }),
        }
    }
}

#[derive(Debug, PartialEq, Eq, Hash)]
struct ContextInner {
    names: Vec<String>,
    order: MonomialOrder,
}

/// Ordered, duplicate-free list of variable names plus the monomial order.
///
/// Cheap to clone; clones share the same allocation.
#[derive(Debug, Clone)]
pub struct VarContext(Arc<ContextInner>);

impl VarContext {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self, PolyError> {
        Self::with_order(names, MonomialOrder::default())
    }

    pub fn with_order<S: AsRef<str>>(names: &[S], order: MonomialOrder) -> Result<Self, PolyError> {
        if names.is_empty() {
            return Err(PolyError::InvalidContext("at least one variable is required".into()));
        }
        let names: Vec<String> = names.iter().map(|s| s.as_ref().to_string()).collect();
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() {
                return Err(PolyError::InvalidContext("empty variable name".into()));
            }
            if names[..i].contains(n) {
                return Err(PolyError::InvalidContext(format!("duplicate variable `{n}`")));
            }
        }
        Ok(VarContext(Arc::new(ContextInner { names, order })))
    }

    pub fn names(&self) -> &[String] {
        &self.0.names
    }

    pub fn dim(&self) -> usize {
        self.0.names.len()
    }

    pub fn order(&self) -> MonomialOrder {
        self.0.order
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.0.names.iter().position(|n| n == name)
    }

    /// Same variables, different monomial order.
    pub fn reordered(&self, order: MonomialOrder) -> VarContext {
        VarContext(Arc::new(ContextInner { names: self.0.names.clone(), order }))
    }
}

impl PartialEq for VarContext {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl Eq for VarContext {}

/// Exponent vector, one entry per context variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn one(n: usize) -> Self {
        Monomial(vec![0; n])
    }

    pub fn var(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Monomial(e)
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// `other / self`, assuming `self.divides(other)`.
    pub fn quotient_of(&self, other: &Monomial) -> Monomial {
        Monomial(other.0.iter().zip(&self.0).map(|(b, a)| b - a).collect())
    }

    pub fn lcm(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| *a.max(b)).collect())
    }

    pub fn is_coprime(&self, other: &Monomial) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| *a == 0 || *b == 0)
    }
}

/// Sparse polynomial with terms sorted in decreasing monomial order.
#[derive(Clone)]
pub struct Polynomial {
    ctx: VarContext,
    terms: Vec<(Monomial, Rational)>,
}

impl Polynomial {
    pub fn zero(ctx: &VarContext) -> Self {
        Polynomial { ctx: ctx.clone(), terms: Vec::new() }
    }

    pub fn constant(ctx: &VarContext, c: Rational) -> Self {
        let mut p = Self::zero(ctx);
        if !c.is_zero() {
            p.terms.push((Monomial::one(ctx.dim()), c));
        }
        p
    }

    pub fn one(ctx: &VarContext) -> Self {
        Self::constant(ctx, Rational::one())
    }

    /// The variable `x_i` (0-based).
    pub fn var(ctx: &VarContext, i: usize) -> Result<Self, PolyError> {
        if i >= ctx.dim() {
            return Err(PolyError::IndexOutOfRange { index: i, dim: ctx.dim() });
        }
        Ok(Polynomial { ctx: ctx.clone(), terms: vec![(Monomial::var(ctx.dim(), i), Rational::one())] })
    }

    /// Builds a polynomial from arbitrary (possibly repeated, possibly zero)
    /// terms.
    pub fn from_terms<I>(ctx: &VarContext, terms: I) -> Self
    where
        I: IntoIterator<Item = (Monomial, Rational)>,
    {
        let mut acc: HashMap<Monomial, Rational> = HashMap::new();
        for (m, c) in terms {
            debug_assert_eq!(m.0.len(), ctx.dim());
            *acc.entry(m).or_insert_with(Rational::zero) += c;
        }
        let mut terms: Vec<_> = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        let order = ctx.order();
        terms.sort_by(|a, b| order.compare(&b.0, &a.0));
        Polynomial { ctx: ctx.clone(), terms }
    }

    pub fn context(&self) -> &VarContext {
        &self.ctx
    }

    pub fn terms(&self) -> &[(Monomial, Rational)] {
        &self.terms
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Some(c)` when the polynomial is the constant `c` (including zero).
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.as_slice() {
            [] => Some(Rational::zero()),
            [(m, c)] if m.is_one() => Some(c.clone()),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.as_constant().is_some()
    }

    /// Maximum total degree over the terms; `None` for the zero polynomial.
    pub fn total_degree(&self) -> Option<u32> {
        self.terms.iter().map(|(m, _)| m.total_degree()).max()
    }

    pub fn leading_term(&self) -> Option<(&Monomial, &Rational)> {
        self.terms.first().map(|(m, c)| (m, c))
    }

    pub fn leading_monomial(&self) -> Option<&Monomial> {
        self.terms.first().map(|(m, _)| m)
    }

    pub fn leading_coeff(&self) -> Option<&Rational> {
        self.terms.first().map(|(_, c)| c)
    }

    /// Scales so that the leading coefficient is one. Zero stays zero.
    pub fn monic(&self) -> Polynomial {
        match self.leading_coeff() {
            None => self.clone(),
            Some(lc) if lc.is_one() => self.clone(),
            Some(lc) => {
                let inv = lc.recip();
                self.scale(&inv)
            }
        }
    }

    pub fn scale(&self, c: &Rational) -> Polynomial {
        if c.is_zero() {
            return Self::zero(&self.ctx);
        }
        Polynomial { ctx: self.ctx.clone(), terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect() }
    }

    /// `c * m * self`.
    pub fn mul_term(&self, m: &Monomial, c: &Rational) -> Polynomial {
        if c.is_zero() {
            return Self::zero(&self.ctx);
        }
        // multiplying by a monomial preserves the relative order of terms
        Polynomial { ctx: self.ctx.clone(), terms: self.terms.iter().map(|(t, a)| (t.mul(m), a * c)).collect() }
    }

    pub fn checked_add(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.same_context(other)?;
        Ok(self.merge(other, false))
    }

    pub fn checked_sub(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.same_context(other)?;
        Ok(self.merge(other, true))
    }

    pub fn checked_mul(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.same_context(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero(&self.ctx));
        }
        let products =
            self.terms.iter().flat_map(|(m1, c1)| other.terms.iter().map(move |(m2, c2)| (m1.mul(m2), c1 * c2)));
        Ok(Self::from_terms(&self.ctx, products))
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut acc = Self::one(&self.ctx);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Formal partial derivative with respect to `x_i` (0-based).
    pub fn partial(&self, i: usize) -> Result<Polynomial, PolyError> {
        if i >= self.ctx.dim() {
            return Err(PolyError::IndexOutOfRange { index: i, dim: self.ctx.dim() });
        }
        let terms = self.terms.iter().filter(|(m, _)| m.0[i] > 0).map(|(m, c)| {
            let e = m.0[i];
            let mut d = m.clone();
            d.0[i] -= 1;
            (d, c * Rational::from_integer(BigInt::from(e)))
        });
        Ok(Self::from_terms(&self.ctx, terms))
    }

    /// Exact evaluation at a rational point.
    pub fn eval(&self, point: &[Rational]) -> Result<Rational, PolyError> {
        if point.len() != self.ctx.dim() {
            return Err(PolyError::DimensionMismatch { expected: self.ctx.dim(), got: point.len() });
        }
        let mut sum = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (x, &e) in point.iter().zip(&m.0) {
                if e > 0 {
                    t *= num_traits::pow(x.clone(), e as usize);
                }
            }
            sum += t;
        }
        Ok(sum)
    }

    /// Floating-point evaluation; the caller guarantees the dimension.
    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                let c = c.to_f64().unwrap_or(f64::NAN);
                m.0.iter().zip(point).fold(c, |acc, (&e, x)| acc * x.powi(e as i32))
            })
            .sum()
    }

    /// Re-sorts the terms under another context with the same variable names.
    pub fn with_context(&self, ctx: &VarContext) -> Result<Polynomial, PolyError> {
        if ctx.names() != self.ctx.names() {
            return Err(PolyError::ContextMismatch);
        }
        Ok(Self::from_terms(ctx, self.terms.iter().cloned()))
    }

    fn same_context(&self, other: &Polynomial) -> Result<(), PolyError> {
        if self.ctx == other.ctx {
            Ok(())
        } else {
            Err(PolyError::ContextMismatch)
        }
    }

    fn merge(&self, other: &Polynomial, negate: bool) -> Polynomial {
        let order = self.ctx.order();
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < other.terms.len() {
            let (ma, ca) = &self.terms[i];
            let (mb, cb) = &other.terms[j];
            match order.compare(ma, mb) {
                Ordering::Greater => {
                    out.push((ma.clone(), ca.clone()));
                    i += 1;
                }
                Ordering::Less => {
                    out.push((mb.clone(), if negate { -cb } else { cb.clone() }));
                    j += 1;
                }
                Ordering::Equal => {
                    let c = if negate { ca - cb } else { ca + cb };
                    if !c.is_zero() {
                        out.push((ma.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend(self.terms[i..].iter().cloned());
        out.extend(other.terms[j..].iter().map(|(m, c)| (m.clone(), if negate { -c } else { c.clone() })));
        Polynomial { ctx: self.ctx.clone(), terms: out }
    }
}

impl PartialEq for Polynomial {
    fn eq(&self, other: &Self) -> bool {
        self.ctx == other.ctx && self.terms == other.terms
    }
}

impl Eq for Polynomial {}

impl Hash for Polynomial {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.terms.hash(state);
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial({self})")
    }
}

impl<'a> Add<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    /// Panics on a context mismatch; use [`Polynomial::checked_add`] otherwise.
    fn add(self, rhs: &'a Polynomial) -> Polynomial {
        self.checked_add(rhs).expect("polynomial context mismatch")
    }
}

impl<'a> Sub<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &'a Polynomial) -> Polynomial {
        self.checked_sub(rhs).expect("polynomial context mismatch")
    }
}

impl<'a> Mul<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &'a Polynomial) -> Polynomial {
        self.checked_mul(rhs).expect("polynomial context mismatch")
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial { ctx: self.ctx.clone(), terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }
}

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        -&self
    }
}

/// Formats a rational in the input grammar: `3`, `-3`, `1/2`.
pub fn format_rational(c: &Rational) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

fn format_monomial(names: &[String], m: &Monomial) -> String {
    let mut parts = Vec::new();
    for (name, &e) in names.iter().zip(&m.0) {
        match e {
            0 => {}
            1 => parts.push(name.clone()),
            _ => parts.push(format!("{name}^{e}")),
        }
    }
    parts.join("*")
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            match (k, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            if m.is_one() {
                write!(f, "{}", format_rational(&abs))?;
            } else if abs.is_one() {
                write!(f, "{}", format_monomial(self.ctx.names(), m))?;
            } else {
                write!(f, "{}*{}", format_rational(&abs), format_monomial(self.ctx.names(), m))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xy() -> (VarContext, Polynomial, Polynomial) {
        let ctx = VarContext::new(&["x", "y"]).unwrap();
        let x = Polynomial::var(&ctx, 0).unwrap();
        let y = Polynomial::var(&ctx, 1).unwrap();
        (ctx, x, y)
    }

    #[test]
    fn add_examples() {
        let (ctx, x, y) = xy();
        assert!((&x + &(-&x)).is_zero());
        let one = Polynomial::one(&ctx);
        let lhs = &(&x.pow(2) + &one) + &y;
        assert_eq!(lhs.to_string(), "x^2 + y + 1");
        let half_x = x.scale(&rat(1, 2));
        assert_eq!(&half_x + &half_x, x);
    }

    #[test]
    fn mul_examples() {
        let (ctx, x, y) = xy();
        assert_eq!(&(&x + &y) * &(&x - &y), &x.pow(2) - &y.pow(2));
        assert!((&x * &Polynomial::zero(&ctx)).is_zero());
        assert_eq!(&x * &x, x.pow(2));
    }

    #[test]
    fn partial_examples() {
        let (_, x, y) = xy();
        let p = &x.pow(2) + &y.pow(2);
        assert_eq!(p.partial(0).unwrap(), x.scale(&int(2)));
        assert!(y.partial(0).unwrap().is_zero());
        let q = &x.pow(3) * &y.pow(2);
        assert_eq!(q.partial(1).unwrap(), (&x.pow(3) * &y).scale(&int(2)));
        assert_eq!(p.partial(2), Err(PolyError::IndexOutOfRange { index: 2, dim: 2 }));
    }

    #[test]
    fn degree_examples() {
        let (ctx, x, y) = xy();
        let p = &(&x.pow(2) * &y) + &Polynomial::one(&ctx);
        assert_eq!(p.total_degree(), Some(3));
        assert_eq!(Polynomial::zero(&ctx).total_degree(), None);
        assert_eq!(Polynomial::constant(&ctx, int(7)).total_degree(), Some(0));
    }

    #[test]
    fn context_mismatch_is_reported() {
        let (_, x, _) = xy();
        let other = VarContext::new(&["x", "z"]).unwrap();
        let z = Polynomial::var(&other, 1).unwrap();
        assert_eq!(x.checked_add(&z), Err(PolyError::ContextMismatch));
        assert_eq!(x.checked_mul(&z), Err(PolyError::ContextMismatch));
    }

    #[test]
    fn invalid_contexts() {
        assert!(VarContext::new::<&str>(&[]).is_err());
        assert!(VarContext::new(&["x", "x"]).is_err());
    }

    #[test]
    fn grevlex_and_lex_orders() {
        let g = MonomialOrder::Grevlex;
        let l = MonomialOrder::Lex;
        // x*z^2 vs y^3 (degree 3 both): grevlex compares last variable, y^3 wins
        let a = Monomial(vec![1, 0, 2]);
        let b = Monomial(vec![0, 3, 0]);
        assert_eq!(g.compare(&a, &b), Ordering::Less);
        assert_eq!(l.compare(&a, &b), Ordering::Greater);
        // degree dominates under grevlex
        assert_eq!(g.compare(&Monomial(vec![0, 0, 2]), &Monomial(vec![1, 0, 0])), Ordering::Greater);
    }

    #[test]
    fn display_uses_input_grammar() {
        let (ctx, x, y) = xy();
        let p = &(&x.scale(&rat(-1, 2)) * &y) + &Polynomial::constant(&ctx, int(-3));
        assert_eq!(p.to_string(), "-1/2*x*y - 3");
        assert_eq!(Polynomial::zero(&ctx).to_string(), "0");
    }
}

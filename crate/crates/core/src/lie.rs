//! Lie derivatives along polynomial vector fields and remainder sequences.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::groebner::{buchberger, GroebnerBasis, GroebnerError};
use crate::poly::{PolyError, Polynomial, VarContext};

pub const DEFAULT_ITERATION_CAP: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LieError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Groebner(#[from] GroebnerError),
    #[error("vector field has {got} components for {expected} variables")]
    ComponentCount { expected: usize, got: usize },
    #[error("remainder sequence of `{poly}` did not stabilize within {cap} steps")]
    IterationCap { poly: String, cap: usize },
}

/// `x' = f(x)` with one polynomial component per context variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorField {
    ctx: VarContext,
    components: Vec<Polynomial>,
}

impl VectorField {
    pub fn new(ctx: &VarContext, components: Vec<Polynomial>) -> Result<Self, LieError> {
        if components.len() != ctx.dim() {
            return Err(LieError::ComponentCount { expected: ctx.dim(), got: components.len() });
        }
        if components.iter().any(|c| c.context() != ctx) {
            return Err(PolyError::ContextMismatch.into());
        }
        Ok(VectorField { ctx: ctx.clone(), components })
    }

    pub fn context(&self) -> &VarContext {
        &self.ctx
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// `-f`.
    pub fn reverse(&self) -> VectorField {
        VectorField { ctx: self.ctx.clone(), components: self.components.iter().map(|c| -c).collect() }
    }

    /// Maximum component degree; `None` for the zero field.
    pub fn degree(&self) -> Option<u32> {
        self.components.iter().filter_map(Polynomial::total_degree).max()
    }

    pub fn eval_f64(&self, point: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.eval_f64(point)).collect()
    }
}

/// `∇p · f`.
pub fn lie_derivative(p: &Polynomial, f: &VectorField) -> Result<Polynomial, PolyError> {
    if p.context() != f.context() {
        return Err(PolyError::ContextMismatch);
    }
    let mut acc = Polynomial::zero(p.context());
    for (i, fi) in f.components().iter().enumerate() {
        let d = p.partial(i)?;
        if !d.is_zero() {
            acc = &acc + &(&d * fi);
        }
    }
    Ok(acc)
}

/// `p^{(k)}`, the k-th iterated Lie derivative.
pub fn higher_lie_derivative(p: &Polynomial, f: &VectorField, k: usize) -> Result<Polynomial, PolyError> {
    let mut acc = p.clone();
    for _ in 0..k {
        acc = lie_derivative(&acc, f)?;
    }
    Ok(acc)
}

/// `rem_0 … rem_ord` together with a Gröbner basis of the stabilized ideal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemainderSequence {
    pub source: Polynomial,
    pub remainders: Vec<Polynomial>,
    pub order: usize,
    pub stabilized_basis: GroebnerBasis,
}

pub fn remainder_sequence(p: &Polynomial, f: &VectorField) -> Result<RemainderSequence, LieError> {
    remainder_sequence_capped(p, f, DEFAULT_ITERATION_CAP)
}

pub fn remainder_sequence_capped(p: &Polynomial, f: &VectorField, cap: usize) -> Result<RemainderSequence, LieError> {
    if p.context() != f.context() {
        return Err(PolyError::ContextMismatch.into());
    }
    if p.is_zero() {
        return Ok(RemainderSequence {
            source: p.clone(),
            remainders: vec![p.clone()],
            order: 0,
            stabilized_basis: GroebnerBasis::zero_ideal(p.context()),
        });
    }
    let mut remainders = vec![p.clone()];
    let mut basis = buchberger(std::slice::from_ref(p))?;
    loop {
        let last = remainders.last().expect("nonempty");
        let next = basis.normal_form(&lie_derivative(last, f)?)?;
        if next.is_zero() {
            break;
        }
        if remainders.len() > cap {
            return Err(LieError::IterationCap { poly: p.to_string(), cap });
        }
        basis = basis.extend(std::slice::from_ref(&next))?;
        remainders.push(next);
    }
    Ok(RemainderSequence { source: p.clone(), order: remainders.len() - 1, remainders, stabilized_basis: basis })
}

/// Memoizes remainder sequences for one vector field.
#[derive(Debug)]
pub struct RemainderCache {
    field: VectorField,
    cap: usize,
    entries: Mutex<HashMap<Polynomial, Arc<RemainderSequence>>>,
}

impl RemainderCache {
    pub fn new(field: VectorField, cap: usize) -> Self {
        RemainderCache { field, cap, entries: Mutex::new(HashMap::new()) }
    }

    pub fn field(&self) -> &VectorField {
        &self.field
    }

    pub fn get(&self, p: &Polynomial) -> Result<Arc<RemainderSequence>, LieError> {
        if let Some(hit) = self.entries.lock().expect("cache lock").get(p) {
            return Ok(hit.clone());
        }
        let seq = Arc::new(remainder_sequence_capped(p, &self.field, self.cap)?);
        self.entries.lock().expect("cache lock").insert(p.clone(), seq.clone());
        Ok(seq)
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_polynomial;

    fn field(ctx: &VarContext, comps: &[&str]) -> VectorField {
        VectorField::new(ctx, comps.iter().map(|c| parse_polynomial(c, ctx).unwrap()).collect()).unwrap()
    }

    fn p(ctx: &VarContext, s: &str) -> Polynomial {
        parse_polynomial(s, ctx).unwrap()
    }

    #[test]
    fn lie_derivative_examples() {
        let c1 = VarContext::new(&["x"]).unwrap();
        assert_eq!(lie_derivative(&p(&c1, "x"), &field(&c1, &["1"])).unwrap(), p(&c1, "1"));
        let c2 = VarContext::new(&["x", "y"]).unwrap();
        assert!(lie_derivative(&p(&c2, "x^2 + y^2"), &field(&c2, &["-y", "x"])).unwrap().is_zero());
        assert!(lie_derivative(&p(&c2, "y - x^2"), &field(&c2, &["1", "2*x"])).unwrap().is_zero());
    }

    #[test]
    fn remainder_sequence_examples() {
        let c1 = VarContext::new(&["x"]).unwrap();
        let s = remainder_sequence(&p(&c1, "x"), &field(&c1, &["-x"])).unwrap();
        assert_eq!((s.order, s.remainders.clone()), (0, vec![p(&c1, "x")]));

        let c2 = VarContext::new(&["x", "y"]).unwrap();
        let s = remainder_sequence(&p(&c2, "y - x^2"), &field(&c2, &["1", "2*x"])).unwrap();
        assert_eq!((s.order, s.remainders.clone()), (0, vec![p(&c2, "y - x^2")]));

        let s = remainder_sequence(&p(&c2, "x"), &field(&c2, &["y", "1"])).unwrap();
        assert_eq!(s.order, 2);
        assert_eq!(s.remainders, vec![p(&c2, "x"), p(&c2, "y"), p(&c2, "1")]);
        assert!(s.stabilized_basis.is_unit_ideal());
    }

    #[test]
    fn zero_polynomial_is_degenerate() {
        let c1 = VarContext::new(&["x"]).unwrap();
        let s = remainder_sequence(&p(&c1, "0"), &field(&c1, &["1"])).unwrap();
        assert_eq!(s.order, 0);
        assert!(s.stabilized_basis.is_zero_ideal());
    }

    #[test]
    fn iteration_cap_is_a_diagnostic() {
        let c1 = VarContext::new(&["x", "t"]).unwrap();
        // x' = t, t' = 1 gives x, t, 1: three steps
        let f = field(&c1, &["t", "1"]);
        assert!(matches!(remainder_sequence_capped(&p(&c1, "x"), &f, 1), Err(LieError::IterationCap { .. })));
        assert_eq!(remainder_sequence_capped(&p(&c1, "x"), &f, 2).unwrap().order, 2);
    }

    #[test]
    fn reverse_is_an_involution() {
        let c2 = VarContext::new(&["x", "y"]).unwrap();
        let f = field(&c2, &["-x^3", "-y^3 + x"]);
        assert_eq!(f.reverse(), field(&c2, &["x^3", "y^3 - x"]));
        assert_eq!(f.reverse().reverse(), f);
        let c1 = VarContext::new(&["x"]).unwrap();
        assert_eq!(field(&c1, &["1"]).reverse(), field(&c1, &["-1"]));
    }

    #[test]
    fn component_count_is_checked() {
        let c2 = VarContext::new(&["x", "y"]).unwrap();
        let err = VectorField::new(&c2, vec![p(&c2, "x")]).unwrap_err();
        assert_eq!(err, LieError::ComponentCount { expected: 2, got: 1 });
    }

    #[test]
    fn cache_reuses_sequences() {
        let c2 = VarContext::new(&["x", "y"]).unwrap();
        let cache = RemainderCache::new(field(&c2, &["y", "1"]), DEFAULT_ITERATION_CAP);
        let a = cache.get(&p(&c2, "x")).unwrap();
        let b = cache.get(&p(&c2, "x")).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(cache.len(), 1);
    }
}

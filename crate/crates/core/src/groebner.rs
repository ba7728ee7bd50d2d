//! Multivariate division, Buchberger completion and ideal membership.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::Zero;
use thiserror::Error;

use crate::poly::{Monomial, MonomialOrder, PolyError, Polynomial, Rational, VarContext};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroebnerError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("an empty generator list has no variable context")]
    NoGenerators,
}

/// Result of dividing `p` by an ordered list of divisors:
/// `p = Σ quotients[i] * divisors[i] + remainder`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Division {
    pub quotients: Vec<Polynomial>,
    pub remainder: Polynomial,
}

fn check_contexts(p: &Polynomial, divisors: &[Polynomial]) -> Result<(), PolyError> {
    if divisors.iter().any(|g| g.context() != p.context()) {
        Err(PolyError::ContextMismatch)
    } else {
        Ok(())
    }
}

/// `work - c * m * g` for a descending term list `work`, skipping the
/// leading term of `g`, which is assumed to cancel the head of `work`.
fn subtract_multiple(
    work: &[(Monomial, Rational)],
    g: &Polynomial,
    m: &Monomial,
    c: &Rational,
    order: MonomialOrder,
) -> Vec<(Monomial, Rational)> {
    let tail = &g.terms()[1..];
    let mut out = Vec::with_capacity(work.len() + tail.len());
    let (mut i, mut j) = (1, 0);
    while i < work.len() || j < tail.len() {
        let next = match (work.get(i), tail.get(j)) {
            (Some(a), Some(b)) => {
                let mb = b.0.mul(m);
                match order.compare(&a.0, &mb) {
                    std::cmp::Ordering::Greater => {
                        i += 1;
                        Some(a.clone())
                    }
                    std::cmp::Ordering::Less => {
                        j += 1;
                        Some((mb, -(c * &b.1)))
                    }
                    std::cmp::Ordering::Equal => {
                        i += 1;
                        j += 1;
                        let v = &a.1 - c * &b.1;
                        (!v.is_zero()).then_some((mb, v))
                    }
                }
            }
            (Some(a), None) => {
                i += 1;
                Some(a.clone())
            }
            (None, Some(b)) => {
                j += 1;
                Some((b.0.mul(m), -(c * &b.1)))
            }
            (None, None) => None,
        };
        out.extend(next);
    }
    out
}

/// Division core. Repeatedly takes the largest remaining term, cancels it with
/// the first divisor (in list order) whose leading monomial divides it, or
/// moves it to the remainder.
fn divide(p: &Polynomial, divisors: &[Polynomial], mut record: Option<&mut Vec<Polynomial>>) -> Polynomial {
    let ctx = p.context();
    let order = ctx.order();
    let mut work: Vec<(Monomial, Rational)> = p.terms().to_vec();
    let mut rem_terms: Vec<(Monomial, Rational)> = Vec::new();
    while let Some((m, c)) = work.first() {
        let hit = divisors.iter().enumerate().find_map(|(i, g)| {
            g.leading_term().filter(|(lm, _)| lm.divides(m)).map(|(lm, lc)| (i, lm.quotient_of(m), c / lc))
        });
        match hit {
            Some((i, q, coeff)) => {
                work = subtract_multiple(&work, &divisors[i], &q, &coeff, order);
                if let Some(qs) = record.as_deref_mut() {
                    qs[i] = &qs[i] + &Polynomial::from_terms(ctx, [(q, coeff)]);
                }
            }
            None => {
                // remaining terms stay sorted; drain the head in one go
                let keep = work
                    .iter()
                    .position(|(t, _)| divisors.iter().any(|g| g.leading_monomial().is_some_and(|lm| lm.divides(t))))
                    .unwrap_or(work.len());
                rem_terms.extend(work.drain(..keep));
            }
        }
    }
    Polynomial::from_terms(ctx, rem_terms)
}

/// Remainder of `p` on division by `divisors`. An empty divisor list (the
/// zero ideal) returns `p` unchanged; zero divisors are ignored.
pub fn reduce(p: &Polynomial, divisors: &[Polynomial]) -> Result<Polynomial, PolyError> {
    check_contexts(p, divisors)?;
    Ok(divide(p, divisors, None))
}

/// Same as [`reduce`] but also records the quotient of every divisor.
pub fn reduce_with_quotients(p: &Polynomial, divisors: &[Polynomial]) -> Result<Division, PolyError> {
    check_contexts(p, divisors)?;
    let mut quotients = vec![Polynomial::zero(p.context()); divisors.len()];
    let remainder = divide(p, divisors, Some(&mut quotients));
    Ok(Division { quotients, remainder })
}

/// `lcm/LT(a) * a - lcm/LT(b) * b`.
pub fn s_polynomial(a: &Polynomial, b: &Polynomial) -> Result<Polynomial, PolyError> {
    if a.context() != b.context() {
        return Err(PolyError::ContextMismatch);
    }
    let (Some((ma, ca)), Some((mb, cb))) = (a.leading_term(), b.leading_term()) else {
        return Ok(Polynomial::zero(a.context()));
    };
    let l = ma.lcm(mb);
    let left = a.mul_term(&ma.quotient_of(&l), &ca.recip());
    let right = b.mul_term(&mb.quotient_of(&l), &cb.recip());
    Ok(&left - &right)
}

/// Reduced Gröbner basis: monic, inter-reduced, sorted by increasing leading
/// monomial. An empty generator list denotes the zero ideal.
#[derive(Clone, PartialEq, Eq)]
pub struct GroebnerBasis {
    ctx: VarContext,
    generators: Vec<Polynomial>,
}

impl fmt::Debug for GroebnerBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.generators.iter().map(|g| g.to_string())).finish()
    }
}

impl GroebnerBasis {
    pub fn zero_ideal(ctx: &VarContext) -> Self {
        GroebnerBasis { ctx: ctx.clone(), generators: Vec::new() }
    }

    pub fn context(&self) -> &VarContext {
        &self.ctx
    }

    pub fn order(&self) -> MonomialOrder {
        self.ctx.order()
    }

    pub fn generators(&self) -> &[Polynomial] {
        &self.generators
    }

    pub fn is_zero_ideal(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn is_unit_ideal(&self) -> bool {
        self.generators.len() == 1 && self.generators[0].is_constant()
    }

    pub fn normal_form(&self, p: &Polynomial) -> Result<Polynomial, PolyError> {
        reduce(p, &self.generators)
    }

    pub fn contains(&self, p: &Polynomial) -> Result<bool, PolyError> {
        Ok(self.normal_form(p)?.is_zero())
    }

    /// Basis of the ideal generated by `self` together with `extra`. Pairs
    /// among the existing generators are not revisited.
    pub fn extend(&self, extra: &[Polynomial]) -> Result<GroebnerBasis, GroebnerError> {
        for e in extra {
            if e.context() != &self.ctx {
                return Err(PolyError::ContextMismatch.into());
            }
        }
        let mut state = Completion::new(self.generators.clone());
        for e in extra {
            state.add(e.clone())?;
        }
        state.run()?;
        Ok(state.finish(&self.ctx))
    }
}

/// Buchberger completion of `gens`.
pub fn buchberger(gens: &[Polynomial]) -> Result<GroebnerBasis, GroebnerError> {
    let ctx = gens.first().ok_or(GroebnerError::NoGenerators)?.context().clone();
    GroebnerBasis::zero_ideal(&ctx).extend(gens)
}

/// Membership test by normal form.
pub fn ideal_member(p: &Polynomial, gb: &GroebnerBasis) -> Result<bool, PolyError> {
    gb.contains(p)
}

struct Completion {
    gens: Vec<Polynomial>,
    pending: BTreeSet<(usize, usize)>,
    unit: bool,
}

impl Completion {
    fn new(gens: Vec<Polynomial>) -> Self {
        let unit = gens.iter().any(|g| g.is_constant() && !g.is_zero());
        Completion { gens, pending: BTreeSet::new(), unit }
    }

    fn add(&mut self, p: Polynomial) -> Result<(), GroebnerError> {
        if self.unit {
            return Ok(());
        }
        let nf = reduce(&p, &self.gens)?;
        if nf.is_zero() {
            return Ok(());
        }
        if nf.is_constant() {
            self.unit = true;
            return Ok(());
        }
        let t = self.gens.len();
        self.gens.push(nf.monic());
        for i in 0..t {
            self.pending.insert((i, t));
        }
        Ok(())
    }

    fn lm(&self, i: usize) -> &Monomial {
        self.gens[i].leading_monomial().expect("nonzero generator")
    }

    fn pair_key(&self, &(i, j): &(usize, usize)) -> Monomial {
        self.lm(i).lcm(self.lm(j))
    }

    fn next_pair(&self) -> Option<(usize, usize)> {
        let order = self.gens.first()?.context().order();
        self.pending.iter().copied().min_by(|a, b| {
            let (la, lb) = (self.pair_key(a), self.pair_key(b));
            la.total_degree().cmp(&lb.total_degree()).then_with(|| order.compare(&la, &lb)).then_with(|| a.cmp(b))
        })
    }

    fn is_pending(&self, a: usize, b: usize) -> bool {
        self.pending.contains(&(a.min(b), a.max(b)))
    }

    fn chain_criterion(&self, i: usize, j: usize, lcm: &Monomial) -> bool {
        (0..self.gens.len())
            .any(|k| k != i && k != j && self.lm(k).divides(lcm) && !self.is_pending(i, k) && !self.is_pending(j, k))
    }

    fn run(&mut self) -> Result<(), GroebnerError> {
        while !self.unit {
            let Some((i, j)) = self.next_pair() else { break };
            self.pending.remove(&(i, j));
            if self.lm(i).is_coprime(self.lm(j)) {
                continue;
            }
            let l = self.lm(i).lcm(self.lm(j));
            if self.chain_criterion(i, j, &l) {
                continue;
            }
            let s = s_polynomial(&self.gens[i], &self.gens[j])?;
            self.add(s)?;
        }
        Ok(())
    }

    fn finish(self, ctx: &VarContext) -> GroebnerBasis {
        if self.unit {
            return GroebnerBasis { ctx: ctx.clone(), generators: vec![Polynomial::one(ctx)] };
        }
        let gens: Vec<Polynomial> = self.gens.into_iter().filter(|g| !g.is_zero()).map(|g| g.monic()).collect();
        // minimize: drop generators whose leading monomial is divisible by an
        // earlier-kept or any other generator's leading monomial
        let mut minimal: Vec<Polynomial> = Vec::new();
        for (i, g) in gens.iter().enumerate() {
            let lm = g.leading_monomial().expect("nonzero");
            let redundant = gens.iter().enumerate().any(|(k, h)| {
                let hm = h.leading_monomial().expect("nonzero");
                k != i && hm.divides(lm) && (hm != lm || k < i)
            });
            if !redundant {
                minimal.push(g.clone());
            }
        }
        let mut reduced = Vec::with_capacity(minimal.len());
        for i in 0..minimal.len() {
            let others: Vec<Polynomial> =
                minimal.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, h)| h.clone()).collect();
            let r = divide(&minimal[i], &others, None);
            reduced.push(r.monic());
        }
        let order = ctx.order();
        reduced.sort_by(|a, b| order.compare(a.leading_monomial().unwrap(), b.leading_monomial().unwrap()));
        GroebnerBasis { ctx: ctx.clone(), generators: reduced }
    }
}

/// True when every S-polynomial of the generators reduces to zero.
pub fn satisfies_buchberger_criterion(gb: &GroebnerBasis) -> Result<bool, PolyError> {
    let g = gb.generators();
    for i in 0..g.len() {
        for j in i + 1..g.len() {
            if !reduce(&s_polynomial(&g[i], &g[j])?, g)?.is_zero() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Re-expands a division record; true when it reproduces `p` exactly.
pub fn division_is_exact(p: &Polynomial, divisors: &[Polynomial], d: &Division) -> bool {
    let mut acc = d.remainder.clone();
    for (q, g) in d.quotients.iter().zip(divisors) {
        acc = &acc + &(q * g);
    }
    acc == *p
        && d.remainder
            .terms()
            .iter()
            .all(|(m, c)| !c.is_zero() && divisors.iter().all(|g| g.leading_monomial().is_none_or(|lm| !lm.divides(m))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_polynomial;

    fn ctx() -> VarContext {
        VarContext::new(&["x", "y", "z"]).unwrap()
    }

    fn p(s: &str) -> Polynomial {
        parse_polynomial(s, &ctx()).unwrap()
    }

    fn ps(items: &[&str]) -> Vec<Polynomial> {
        items.iter().map(|s| p(s)).collect()
    }

    #[test]
    fn reduce_examples() {
        assert_eq!(reduce(&p("x^2 + 1"), &ps(&["x"])).unwrap(), p("1"));
        assert_eq!(reduce(&p("x*y"), &ps(&["x"])).unwrap(), p("0"));
        assert_eq!(reduce(&p("y^2 - 1"), &ps(&["x"])).unwrap(), p("y^2 - 1"));
        assert_eq!(reduce(&p("x + y"), &[]).unwrap(), p("x + y"));
    }

    #[test]
    fn reduce_rejects_foreign_context() {
        let other = VarContext::new(&["a"]).unwrap();
        let q = Polynomial::var(&other, 0).unwrap();
        assert_eq!(reduce(&p("x"), &[q]), Err(PolyError::ContextMismatch));
    }

    #[test]
    fn division_record_reexpands() {
        let divisors = ps(&["x*y - 1", "y^2 - 1"]);
        let target = p("x^2*y + x*y^2 + y^2");
        let d = reduce_with_quotients(&target, &divisors).unwrap();
        assert!(division_is_exact(&target, &divisors, &d));
        assert_eq!(d.remainder, reduce(&target, &divisors).unwrap());
    }

    #[test]
    fn buchberger_examples() {
        let gb = buchberger(&ps(&["x^2 + y^2 - 1", "x"])).unwrap();
        assert_eq!(gb.generators(), ps(&["x", "y^2 - 1"]).as_slice());
        let gb = buchberger(&ps(&["x"])).unwrap();
        assert_eq!(gb.generators(), ps(&["x"]).as_slice());
        let gb = buchberger(&ps(&["x", "y", "1"])).unwrap();
        assert_eq!(gb.generators(), ps(&["1"]).as_slice());
        assert!(gb.is_unit_ideal());
    }

    #[test]
    fn zero_generators_give_the_zero_ideal() {
        let gb = buchberger(&ps(&["0", "0"])).unwrap();
        assert!(gb.is_zero_ideal());
        assert_eq!(gb.normal_form(&p("x + 1")).unwrap(), p("x + 1"));
        assert_eq!(buchberger(&[]), Err(GroebnerError::NoGenerators));
    }

    #[test]
    fn membership_examples() {
        let gb = buchberger(&ps(&["x"])).unwrap();
        assert!(ideal_member(&p("x*y"), &gb).unwrap());
        assert!(!ideal_member(&p("y"), &gb).unwrap());
        assert!(ideal_member(&p("-x"), &gb).unwrap());
    }

    #[test]
    fn textbook_basis() {
        // x^2 - y, x^3 - z  (twisted-cubic style)
        let gb = buchberger(&ps(&["x^2 - y", "x^3 - z"])).unwrap();
        assert!(satisfies_buchberger_criterion(&gb).unwrap());
        for g in ps(&["x^2 - y", "x^3 - z", "x*y - z", "y^2 - x*z"]) {
            assert!(gb.contains(&g).unwrap(), "{g}");
        }
        assert!(!gb.contains(&p("x - y")).unwrap());
    }

    #[test]
    fn extend_matches_full_recomputation() {
        let base = buchberger(&ps(&["x^2 + y", "x*y - 1"])).unwrap();
        let ext = base.extend(&ps(&["y^3 + z"])).unwrap();
        let full = buchberger(&ps(&["x^2 + y", "x*y - 1", "y^3 + z"])).unwrap();
        assert_eq!(ext, full);
    }

    #[test]
    fn lex_basis_eliminates() {
        let lex = VarContext::with_order(&["x", "y"], MonomialOrder::Lex).unwrap();
        let g1 = parse_polynomial("x^2 + y^2 - 1", &lex).unwrap();
        let g2 = parse_polynomial("x - y", &lex).unwrap();
        let gb = buchberger(&[g1, g2]).unwrap();
        assert_eq!(
            gb.generators(),
            &[parse_polynomial("y^2 - 1/2", &lex).unwrap(), parse_polynomial("x - y", &lex).unwrap()]
        );
    }
}

//! Algebraic laws checked on generated inputs.

mod common;

use common::{backend, poly_from};
use invcheck::formula::{Atom, Formula};
use invcheck::groebner::{
    buchberger, division_is_exact, reduce_with_quotients, s_polynomial, satisfies_buchberger_criterion,
};
use invcheck::invariance::{exit_atom, in_f};
use invcheck::lie::{higher_lie_derivative, lie_derivative, remainder_sequence, RemainderCache, VectorField};
use invcheck::parse::parse_formula;
use invcheck::poly::{int, MonomialOrder, Polynomial, Rational, VarContext};
use invcheck::qe::{SatBackend, SatStatus};
use proptest::prelude::*;

type Terms = Vec<(Vec<u32>, i64)>;

fn terms(n: usize, max_exp: u32, max_terms: usize) -> impl Strategy<Value = Terms> {
    prop::collection::vec((prop::collection::vec(0..=max_exp, n), -3i64..=3), 0..=max_terms)
}

fn ctx2() -> VarContext {
    VarContext::new(&["x", "y"]).unwrap()
}

fn point(n: usize) -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec((-5i64..=5, 1i64..=3), n)
        .prop_map(|v| v.into_iter().map(|(a, b)| Rational::new(a.into(), b.into())).collect())
}

fn field2(a: &Terms, b: &Terms) -> VectorField {
    let c = ctx2();
    VectorField::new(&c, vec![poly_from(&c, a), poly_from(&c, b)]).unwrap()
}

/// Formulas over the four comparison kinds and all connectives.
fn formula2() -> impl Strategy<Value = Formula> {
    let atom = (terms(2, 2, 3), 0..6u8).prop_map(|(t, k)| {
        let p = poly_from(&ctx2(), &t);
        match k {
            0 => Formula::lt(p),
            1 => Formula::le(p),
            2 => Formula::eq(p),
            3 => Formula::ne(p),
            4 => Formula::gt(p),
            _ => Formula::ge(p),
        }
    });
    atom.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            inner.prop_map(Formula::not),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_axioms(a in terms(2, 3, 4), b in terms(2, 3, 4), c in terms(2, 3, 4)) {
        let ctx = ctx2();
        let (p, q, r) = (poly_from(&ctx, &a), poly_from(&ctx, &b), poly_from(&ctx, &c));
        prop_assert_eq!(&p + &q, &q + &p);
        prop_assert_eq!(&p * &q, &q * &p);
        prop_assert_eq!(&(&p * &q) * &r, &p * &(&q * &r));
        prop_assert_eq!(&p * &(&q + &r), &(&p * &q) + &(&p * &r));
        prop_assert!((&p - &p).is_zero());
    }

    #[test]
    fn degree_of_products(a in terms(2, 3, 4), b in terms(2, 3, 4)) {
        let ctx = ctx2();
        let (p, q) = (poly_from(&ctx, &a), poly_from(&ctx, &b));
        if let (Some(dp), Some(dq)) = (p.total_degree(), q.total_degree()) {
            prop_assert_eq!((&p * &q).total_degree(), Some(dp + dq));
        } else {
            prop_assert!((&p * &q).is_zero());
        }
    }

    #[test]
    fn evaluation_is_a_homomorphism(a in terms(2, 3, 4), b in terms(2, 3, 4), pt in point(2)) {
        let ctx = ctx2();
        let (p, q) = (poly_from(&ctx, &a), poly_from(&ctx, &b));
        let (vp, vq) = (p.eval(&pt).unwrap(), q.eval(&pt).unwrap());
        prop_assert_eq!((&p + &q).eval(&pt).unwrap(), &vp + &vq);
        prop_assert_eq!((&p * &q).eval(&pt).unwrap(), &vp * &vq);
    }

    #[test]
    fn printed_formulas_parse_back(s in formula2()) {
        let back = parse_formula(&s.to_string(), &ctx2()).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn negation_complements(s in formula2(), pt in point(2)) {
        let v = s.evaluate(&pt).unwrap();
        prop_assert_eq!(s.neg_step().evaluate(&pt).unwrap(), !v);
        prop_assert_eq!(s.negated().evaluate(&pt).unwrap(), !v);
        prop_assert!(s.negated().atoms().iter().all(|a| matches!(a, Atom::Lt(_) | Atom::Eq(_) | Atom::True | Atom::False)));
    }

    #[test]
    fn desugared_comparisons_keep_their_meaning(t in terms(2, 2, 3), pt in point(2)) {
        let p = poly_from(&ctx2(), &t);
        let v = p.eval(&pt).unwrap();
        let zero = int(0);
        prop_assert_eq!(Formula::le(p.clone()).evaluate(&pt).unwrap(), v <= zero);
        prop_assert_eq!(Formula::gt(p.clone()).evaluate(&pt).unwrap(), v > zero);
        prop_assert_eq!(Formula::ge(p.clone()).evaluate(&pt).unwrap(), v >= zero);
        prop_assert_eq!(Formula::ne(p).evaluate(&pt).unwrap(), v != zero);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn groebner_bases_are_closed(gens in prop::collection::vec(terms(2, 2, 3), 1..=3)) {
        let ctx = ctx2();
        let gens: Vec<Polynomial> = gens.iter().map(|t| poly_from(&ctx, t)).collect();
        let gb = buchberger(&gens).unwrap();
        prop_assert!(satisfies_buchberger_criterion(&gb).unwrap());
        for (i, a) in gb.generators().iter().enumerate() {
            for b in &gb.generators()[i + 1..] {
                prop_assert!(gb.normal_form(&s_polynomial(a, b).unwrap()).unwrap().is_zero());
            }
        }
        for g in &gens {
            prop_assert!(gb.contains(g).unwrap());
        }
        if !gb.is_zero_ideal() {
            let again = buchberger(gb.generators()).unwrap();
            prop_assert_eq!(again.generators(), gb.generators());
        }
    }

    #[test]
    fn division_cofactors_reconstruct(p in terms(2, 3, 4), divs in prop::collection::vec(terms(2, 2, 3), 1..=3)) {
        let ctx = ctx2();
        let p = poly_from(&ctx, &p);
        let divs: Vec<Polynomial> = divs.iter().map(|t| poly_from(&ctx, t)).filter(|d| !d.is_zero()).collect();
        let d = reduce_with_quotients(&p, &divs).unwrap();
        prop_assert!(division_is_exact(&p, &divs, &d));
    }

    #[test]
    fn membership_is_order_independent(
        gens in prop::collection::vec(terms(2, 2, 3), 1..=2),
        cof in prop::collection::vec(terms(2, 1, 2), 2),
        noise in terms(2, 2, 2),
    ) {
        let grevlex = ctx2();
        let lex = grevlex.reordered(MonomialOrder::Lex);
        let gens: Vec<Polynomial> = gens.iter().map(|t| poly_from(&grevlex, t)).collect();
        let mut member = Polynomial::zero(&grevlex);
        for (g, c) in gens.iter().zip(&cof) {
            member = &member + &(g * &poly_from(&grevlex, c));
        }
        let other = &member + &poly_from(&grevlex, &noise);
        let gb = buchberger(&gens).unwrap();
        let lex_gens: Vec<Polynomial> = gens.iter().map(|g| g.with_context(&lex).unwrap()).collect();
        let gb_lex = buchberger(&lex_gens).unwrap();
        prop_assert!(gb.contains(&member).unwrap());
        prop_assert!(gb_lex.contains(&member.with_context(&lex).unwrap()).unwrap());
        prop_assert_eq!(gb.contains(&other).unwrap(), gb_lex.contains(&other.with_context(&lex).unwrap()).unwrap());
    }

    #[test]
    fn lie_derivative_laws(a in terms(2, 3, 3), b in terms(2, 3, 3), f0 in terms(2, 2, 3), f1 in terms(2, 2, 3), k in -3i64..=3) {
        let ctx = ctx2();
        let f = field2(&f0, &f1);
        let (p, q) = (poly_from(&ctx, &a), poly_from(&ctx, &b));
        let (lp, lq) = (lie_derivative(&p, &f).unwrap(), lie_derivative(&q, &f).unwrap());
        prop_assert_eq!(lie_derivative(&(&p * &q), &f).unwrap(), &(&lp * &q) + &(&p * &lq));
        let c = int(k);
        prop_assert_eq!(lie_derivative(&(&p.scale(&c) + &q), &f).unwrap(), &lp.scale(&c) + &lq);
    }

    #[test]
    fn remainder_sequences_have_the_expected_form(a in terms(2, 2, 3), f0 in terms(2, 2, 2), f1 in terms(2, 2, 2)) {
        let ctx = ctx2();
        let f = field2(&f0, &f1);
        let p = poly_from(&ctx, &a);
        let seq = remainder_sequence(&p, &f).unwrap();
        prop_assert_eq!(&seq.remainders[0], &p);
        let grow = f.degree().unwrap_or(0).max(1) - 1;
        let deg_p = p.total_degree().unwrap_or(0);
        for i in 1..seq.remainders.len() {
            // rem_i differs from the i-th Lie derivative by an element of the
            // ideal of the earlier remainders
            let gb = buchberger(&seq.remainders[..i]).unwrap();
            let diff = &higher_lie_derivative(&p, &f, i).unwrap() - &seq.remainders[i];
            prop_assert!(gb.contains(&diff).unwrap());
            prop_assert!(seq.remainders[i].total_degree().unwrap_or(0) <= deg_p + i as u32 * grow);
        }
        prop_assert_eq!(seq.remainders.len(), seq.order + 1);
        let gb = buchberger(&seq.remainders).unwrap();
        prop_assert_eq!(gb.generators(), seq.stabilized_basis.generators());
        for j in 1..=3 {
            prop_assert!(gb.contains(&higher_lie_derivative(&p, &f, seq.order + j).unwrap()).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn skipped_exit_sets_are_empty(a in terms(2, 2, 3), f0 in terms(2, 2, 2), f1 in terms(2, 2, 2), strict in any::<bool>()) {
        let ctx = ctx2();
        let p = poly_from(&ctx, &a);
        let atom = if strict { Atom::Lt(p.clone()) } else { Atom::Eq(p.clone()) };
        let s = Formula::Atom(atom.clone());
        let cache = RemainderCache::new(field2(&f0, &f1), 64);
        let exit = exit_atom(&atom, &cache).unwrap();
        if exit.is_false() {
            let inside = in_f(&s, &cache).unwrap();
            let q = Formula::and(s, Formula::not(inside));
            prop_assert_eq!(backend().check_sat(&q, &ctx).unwrap().status, SatStatus::Unsat);
        }
    }
}

//! Decision procedures on systems with closed-form flows.

mod common;

use common::{backend, field, formula};
use invcheck::formula::Formula;
use invcheck::invariance::{Answer, CheckOptions, Checker, Direction, Emptiness, QueryStats};
use invcheck::poly::{int, VarContext};

fn x() -> VarContext {
    VarContext::new(&["x"]).unwrap()
}

fn xy() -> VarContext {
    VarContext::new(&["x", "y"]).unwrap()
}

#[test]
fn half_line_under_contraction_is_invariant() {
    let b = backend();
    let c = x();
    let ch = Checker::new(&field(&c, &["-x"]), &b, CheckOptions::default());
    let s = formula(&c, "x <= 0");
    assert_eq!(ch.es_check(&s).unwrap().answer, Answer::Invariant);
    assert_eq!(ch.lzz_check(&s).unwrap().answer, Answer::Invariant);
}

#[test]
fn half_line_under_drift_is_left_at_the_boundary() {
    let b = backend();
    let c = x();
    let ch = Checker::new(&field(&c, &["1"]), &b, CheckOptions::default());
    let s = formula(&c, "x <= 0");
    for v in [ch.es_check(&s).unwrap(), ch.lzz_check(&s).unwrap()] {
        assert_eq!(v.answer, Answer::NotInvariant);
        let w = v.witness.expect("witness");
        assert_eq!(w.point.unwrap(), vec![int(0)]);
        assert_eq!(w.validated, Some(true));
        assert_eq!(w.branch, Direction::Forward);
    }
}

#[test]
fn parabola_is_invariant() {
    let b = backend();
    let c = xy();
    let ch = Checker::new(&field(&c, &["1", "2*x"]), &b, CheckOptions::default());
    let s = formula(&c, "y - x^2 = 0");
    assert_eq!(ch.es_check(&s).unwrap().answer, Answer::Invariant);
    assert_eq!(ch.lzz_check(&s).unwrap().answer, Answer::Invariant);
}

#[test]
fn backward_witness_for_an_open_set() {
    // x < 0 under x' = 1: S^c = {x >= 0} is entered from the left
    let b = backend();
    let c = x();
    let ch = Checker::new(&field(&c, &["1"]), &b, CheckOptions::default());
    let s = formula(&c, "x < 0");
    for v in [ch.es_check(&s).unwrap(), ch.lzz_check(&s).unwrap()] {
        assert_eq!(v.answer, Answer::NotInvariant);
        let w = v.witness.unwrap();
        assert_eq!(w.branch, Direction::Backward);
        assert_eq!(w.validated, Some(true));
    }
}

#[test]
fn nonempty_examples() {
    let b = backend();
    let c = x();
    let ch = Checker::new(&field(&c, &["1"]), &b, CheckOptions::default());
    let mut st = QueryStats::default();
    let r = ch.nonempty(&formula(&c, "x < 0"), &Formula::tt(), Direction::Forward, &mut st).unwrap();
    assert_eq!(r, Emptiness::Empty);
    assert_eq!(st.reduce_calls, 0);
    let mut st = QueryStats::default();
    let r = ch.nonempty(&formula(&c, "x = 0"), &Formula::tt(), Direction::Forward, &mut st).unwrap();
    assert_eq!(r, Emptiness::NonEmpty { point: Some(vec![int(0)]), symbolic: None });
    assert_eq!(st.reduce_calls, 1);
}

#[test]
fn constrained_examples() {
    let b = backend();
    let c = x();
    let ch = Checker::new(&field(&c, &["1"]), &b, CheckOptions::default());
    let s = formula(&c, "x <= 0");
    let inside = formula(&c, "x < 0");
    assert_eq!(ch.lzz_check_constrained(&s, &inside).unwrap().answer, Answer::Invariant);
    assert_eq!(ch.es_check_constrained(&s, &inside).unwrap().answer, Answer::Invariant);
    let wide = formula(&c, "x <= 1");
    assert_eq!(ch.lzz_check_constrained(&s, &wide).unwrap().answer, Answer::NotInvariant);
    let v = ch.es_check_constrained(&s, &wide).unwrap();
    assert_eq!(v.answer, Answer::NotInvariant);
    assert_eq!(v.witness.unwrap().validated, Some(true));
}

#[test]
fn trivial_constraint_matches_unconstrained() {
    let b = backend();
    let c = xy();
    let ch = Checker::new(&field(&c, &["-y", "x"]), &b, CheckOptions::default());
    for t in ["x^2 + y^2 <= 1", "x < 0", "x^2 + y^2 = 1 && x > 0"] {
        let s = formula(&c, t);
        let tt = Formula::tt();
        assert_eq!(ch.lzz_check(&s).unwrap().answer, ch.lzz_check_constrained(&s, &tt).unwrap().answer, "{t}");
        assert_eq!(ch.es_check(&s).unwrap().answer, ch.es_check_constrained(&s, &tt).unwrap().answer, "{t}");
    }
}

#[test]
fn rotation_keeps_discs_and_circles() {
    let b = backend();
    let c = xy();
    let ch = Checker::new(&field(&c, &["-y", "x"]), &b, CheckOptions::default());
    for (t, expected) in [
        ("x^2 + y^2 <= 1", Answer::Invariant),
        ("x^2 + y^2 = 1", Answer::Invariant),
        ("x^2 + y^2 < 1 || x^2 + y^2 > 4", Answer::Invariant),
        ("x <= 0", Answer::NotInvariant),
        ("x^2 + y^2 = 1 && y >= 0", Answer::NotInvariant),
    ] {
        let s = formula(&c, t);
        assert_eq!(ch.es_check(&s).unwrap().answer, expected, "es {t}");
        assert_eq!(ch.lzz_check(&s).unwrap().answer, expected, "lzz {t}");
        assert_eq!(ch.es_check_fine(&s, None).unwrap().answer, expected, "fine {t}");
    }
}

#[test]
fn fine_check_reports_chunks() {
    let b = backend();
    let c = x();
    let ch = Checker::new(&field(&c, &["1"]), &b, CheckOptions::default());
    let v = ch.es_check_fine(&formula(&c, "x <= 0"), None).unwrap();
    assert_eq!(v.answer, Answer::NotInvariant);
    assert!(v.stats.chunks.unwrap() >= 1);
    assert_eq!(v.witness.unwrap().validated, Some(true));
}

#![allow(dead_code)]

use invcheck::formula::Formula;
use invcheck::lie::VectorField;
use invcheck::parse::{parse_formula, parse_polynomial};
use invcheck::poly::{int, Monomial, Polynomial, VarContext};
use invcheck::qe::{SmtBackend, DEFAULT_SOLVER};
use rand::Rng;

pub fn backend() -> SmtBackend {
    let cmd = std::env::var("INVCHECK_SOLVER").unwrap_or_else(|_| DEFAULT_SOLVER.to_string());
    SmtBackend::new(&cmd).unwrap()
}

pub fn poly(ctx: &VarContext, s: &str) -> Polynomial {
    parse_polynomial(s, ctx).unwrap()
}

pub fn formula(ctx: &VarContext, s: &str) -> Formula {
    parse_formula(s, ctx).unwrap()
}

pub fn field(ctx: &VarContext, comps: &[&str]) -> VectorField {
    VectorField::new(ctx, comps.iter().map(|c| poly(ctx, c)).collect()).unwrap()
}

/// Polynomial from `(exponents, coefficient)` pairs.
pub fn poly_from(ctx: &VarContext, terms: &[(Vec<u32>, i64)]) -> Polynomial {
    Polynomial::from_terms(ctx, terms.iter().map(|(e, c)| (Monomial(e.clone()), int(*c))))
}

/// Random polynomial with total degree at most `deg`, up to `terms` terms and
/// integer coefficients in `[-c, c]`.
pub fn random_poly<R: Rng>(rng: &mut R, ctx: &VarContext, deg: u32, terms: usize, c: i64) -> Polynomial {
    let n = ctx.dim();
    let count = rng.gen_range(1..=terms);
    let mut out = Vec::new();
    for _ in 0..count {
        let mut e = vec![0u32; n];
        let total = rng.gen_range(0..=deg);
        for _ in 0..total {
            e[rng.gen_range(0..n)] += 1;
        }
        out.push((e, rng.gen_range(-c..=c)));
    }
    poly_from(ctx, &out)
}

pub fn random_field<R: Rng>(rng: &mut R, ctx: &VarContext, deg: u32, terms: usize, c: i64) -> VectorField {
    let comps = (0..ctx.dim()).map(|_| random_poly(rng, ctx, deg, terms, c)).collect();
    VectorField::new(ctx, comps).unwrap()
}

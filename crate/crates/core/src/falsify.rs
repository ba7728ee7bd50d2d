//! Numerical cross-check by fixed-step RK4 integration.
//!
//! Results here are advisory: they annotate symbolic verdicts and never
//! replace them.

use std::io::{self, Write};

use num_traits::ToPrimitive;
use rand::Rng;
use thiserror::Error;

use crate::formula::Formula;
use crate::invariance::{Direction, Witness};
use crate::lie::VectorField;
use crate::poly::VarContext;
use crate::qe::model_point_f64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("step, horizon and epsilon must be positive and finite")]
    NonPositive,
    #[error("step {step} must be smaller than the horizon {horizon}")]
    StepTooLarge { step: f64, horizon: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub step: f64,
    pub horizon: f64,
    /// Half-width of the band around zero treated as `= 0`.
    pub eps: f64,
    pub samples: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig { step: 1e-3, horizon: 10.0, eps: 1e-9, samples: 64 }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.step) || !ok(self.horizon) || !ok(self.eps) {
            return Err(ConfigError::NonPositive);
        }
        if self.step >= self.horizon {
            return Err(ConfigError::StepTooLarge { step: self.step, horizon: self.horizon });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EscapeReport {
    /// First sampled state outside `S`.
    Escaped {
        time: f64,
        state: Vec<f64>,
    },
    NoEscape,
    Inconclusive(String),
}

impl EscapeReport {
    pub fn escaped(&self) -> bool {
        matches!(self, EscapeReport::Escaped { .. })
    }
}

fn axpy(x: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    x.iter().zip(k).map(|(xi, ki)| xi + a * ki).collect()
}

/// One classical Runge–Kutta step of size `h`.
pub fn rk4_step(f: &VectorField, x: &[f64], h: f64) -> Vec<f64> {
    let k1 = f.eval_f64(x);
    let k2 = f.eval_f64(&axpy(x, h / 2.0, &k1));
    let k3 = f.eval_f64(&axpy(x, h / 2.0, &k2));
    let k4 = f.eval_f64(&axpy(x, h, &k3));
    (0..x.len()).map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect()
}

fn finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// Integrates from `x0` until the state leaves `s` or the horizon is reached.
pub fn simulate_escape(x0: &[f64], s: &Formula, f: &VectorField, cfg: &IntegratorConfig) -> EscapeReport {
    if !s.evaluate_f64(x0, cfg.eps) {
        return EscapeReport::Inconclusive("initial state is not in the set".into());
    }
    let steps = (cfg.horizon / cfg.step).ceil() as usize;
    let mut x = x0.to_vec();
    for i in 1..=steps {
        x = rk4_step(f, &x, cfg.step);
        if !finite(&x) {
            return EscapeReport::Inconclusive(format!("state became non-finite at t = {}", i as f64 * cfg.step));
        }
        if !s.evaluate_f64(&x, cfg.eps) {
            return EscapeReport::Escaped { time: i as f64 * cfg.step, state: x };
        }
    }
    EscapeReport::NoEscape
}

/// Sampled trajectory `(t, x(t))` up to the horizon or the first
/// non-finite state.
pub fn trajectory(x0: &[f64], f: &VectorField, cfg: &IntegratorConfig) -> Vec<(f64, Vec<f64>)> {
    let steps = (cfg.horizon / cfg.step).ceil() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut x = x0.to_vec();
    out.push((0.0, x.clone()));
    for i in 1..=steps {
        x = rk4_step(f, &x, cfg.step);
        if !finite(&x) {
            break;
        }
        out.push((i as f64 * cfg.step, x.clone()));
    }
    out
}

/// CSV with a header `t,<names…>` and one row per sample.
pub fn write_trajectory_csv<W: Write>(mut w: W, names: &[String], rows: &[(f64, Vec<f64>)]) -> io::Result<()> {
    writeln!(w, "t,{}", names.join(","))?;
    for (t, x) in rows {
        let cells: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{t},{}", cells.join(","))?;
    }
    Ok(())
}

/// Float coordinates of a witness, from its rational point or else from an
/// approximation of its algebraic model.
pub fn witness_start(w: &Witness, ctx: &VarContext) -> Option<Vec<f64>> {
    match (&w.point, &w.symbolic) {
        (Some(p), _) => Some(p.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()),
        (None, Some(model)) => model_point_f64(model, ctx),
        (None, None) => None,
    }
}

/// Numerical corroboration of a witness of non-invariance of `s`.
///
/// A forward witness lies on the boundary of `s` and is integrated directly.
/// A backward witness lies outside `s`. A step of length `h` back along the
/// flow that lands in `s` gives a state whose trajectory reaches the witness
/// at time `h`, which is reported as the escape.
pub fn corroborate(w: &Witness, s: &Formula, f: &VectorField, cfg: &IntegratorConfig) -> EscapeReport {
    let Some(x0) = witness_start(w, f.context()) else {
        return EscapeReport::Inconclusive("witness has no usable coordinates".into());
    };
    match w.branch {
        Direction::Forward => simulate_escape(&x0, s, f, cfg),
        Direction::Backward => {
            if s.evaluate_f64(&x0, cfg.eps) {
                return EscapeReport::Inconclusive("backward witness lies in the set".into());
            }
            let back = f.reverse();
            for scale in [1.0, 10.0, 100.0, 0.1, 0.01, 1e-3, 1e-4] {
                let h = cfg.step * scale;
                if h >= cfg.horizon {
                    continue;
                }
                let z = rk4_step(&back, &x0, h);
                if finite(&z) && s.evaluate_f64(&z, cfg.eps) {
                    return EscapeReport::Escaped { time: h, state: x0 };
                }
            }
            EscapeReport::Inconclusive("no state of the set found one step before the witness".into())
        }
    }
}

/// Rejection samples of `s` in the box `[-radius, radius]^n`. Returns fewer
/// than `count` points when `s` is thin.
pub fn sample_points<R: Rng>(
    s: &Formula,
    dim: usize,
    radius: f64,
    count: usize,
    eps: f64,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for _ in 0..count.saturating_mul(50) {
        if out.len() == count {
            break;
        }
        let p: Vec<f64> = (0..dim).map(|_| rng.gen_range(-radius..=radius)).collect();
        if s.evaluate_f64(&p, eps) {
            out.push(p);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_formula, parse_polynomial};
    use crate::poly::int;

    fn setup(comps: &[&str], s: &str) -> (VectorField, Formula) {
        let c = VarContext::new(&["x"]).unwrap();
        let f = VectorField::new(&c, comps.iter().map(|t| parse_polynomial(t, &c).unwrap()).collect()).unwrap();
        (f, parse_formula(s, &c).unwrap())
    }

    #[test]
    fn drift_leaves_immediately() {
        let (f, s) = setup(&["1"], "x <= 0");
        match simulate_escape(&[0.0], &s, &f, &IntegratorConfig::default()) {
            EscapeReport::Escaped { time, .. } => assert!((time - 1e-3).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn contraction_never_escapes() {
        let (f, s) = setup(&["-x"], "x <= 0");
        assert_eq!(simulate_escape(&[-1.0], &s, &f, &IntegratorConfig::default()), EscapeReport::NoEscape);
    }

    #[test]
    fn rk4_matches_exponential() {
        let (f, _) = setup(&["-x"], "x <= 0");
        let cfg = IntegratorConfig { horizon: 1.0, ..Default::default() };
        let traj = trajectory(&[1.0], &f, &cfg);
        let (t, x) = traj.last().unwrap();
        assert!((t - 1.0).abs() < 1e-9);
        assert!((x[0] - (-1.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn blow_up_is_inconclusive() {
        let (f, s) = setup(&["x^2"], "x <= 10^9");
        let cfg = IntegratorConfig { step: 0.1, horizon: 5.0, ..Default::default() };
        assert!(matches!(
            simulate_escape(&[1.0], &s, &f, &cfg),
            EscapeReport::Escaped { .. } | EscapeReport::Inconclusive(_)
        ));
        let (f, s) = setup(&["x^3"], "true");
        assert!(matches!(simulate_escape(&[10.0], &s, &f, &cfg), EscapeReport::Inconclusive(_)));
    }

    #[test]
    fn backward_witness_is_nudged_into_the_set() {
        let (f, s) = setup(&["1"], "x < 0");
        let w =
            Witness { point: Some(vec![int(0)]), symbolic: None, branch: Direction::Backward, validated: Some(true) };
        assert!(corroborate(&w, &s, &f, &IntegratorConfig::default()).escaped());
    }

    #[test]
    fn backward_witness_with_high_order_contact() {
        let (f, s) = setup(&["1"], "-x^4 < 0");
        let w =
            Witness { point: Some(vec![int(0)]), symbolic: None, branch: Direction::Backward, validated: Some(true) };
        match corroborate(&w, &s, &f, &IntegratorConfig::default()) {
            EscapeReport::Escaped { time, state } => {
                assert!((time - 1e-2).abs() < 1e-12);
                assert_eq!(state, vec![0.0]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &["x".into(), "y".into()], &[(0.0, vec![1.0, 2.5]), (0.5, vec![-1.0, 0.0])])
            .unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,x,y\n0,1,2.5\n0.5,-1,0\n");
    }

    #[test]
    fn config_validation() {
        assert!(IntegratorConfig::default().validate().is_ok());
        assert!(IntegratorConfig { step: 0.0, ..Default::default() }.validate().is_err());
        assert!(IntegratorConfig { step: 20.0, ..Default::default() }.validate().is_err());
    }
}

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cas::{MPoly, RatFunc};
use crate::model::ControlModel;

use super::{c, VerifyError};

type Term = (f64, Vec<(usize, u32)>);

fn compile_poly(p: &MPoly) -> Vec<Term> {
    p.terms()
        .iter()
        .map(|(e, c)| {
            let pw = e.iter().enumerate().filter(|(_, &d)| d > 0).map(|(v, &d)| (v, d as u32)).collect();
            (c.to_f64(), pw)
        })
        .collect()
}

fn eval_terms(terms: &[Term], pt: &[Complex64]) -> (Complex64, f64) {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for (c, pw) in terms {
        let mut t = Complex64::new(*c, 0.0);
        for &(v, d) in pw {
            t *= if d == 1 { pt[v] } else { pt[v].powu(d) };
        }
        scale += t.norm();
        acc += t;
    }
    (acc, scale)
}

/// A rational function flattened for repeated floating-point evaluation.
#[derive(Debug, Clone)]
pub struct CompiledRat {
    num: Vec<Term>,
    den: Vec<Term>,
}

impl CompiledRat {
    pub fn new(r: &RatFunc) -> Self {
        CompiledRat { num: compile_poly(r.num()), den: compile_poly(r.den()) }
    }

    /// `None` when the denominator vanishes relative to its term sizes.
    pub fn eval(&self, pt: &[Complex64]) -> Option<Complex64> {
        let (n, _) = eval_terms(&self.num, pt);
        let (d, scale) = eval_terms(&self.den, pt);
        if d.norm() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return None;
        }
        Some(n / d)
    }
}

/// Initial values, parameters and polynomial inputs for one simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NumericScenario {
    pub x0: Vec<f64>,
    pub theta: Vec<f64>,
    /// Coefficients in ascending powers of t, one list per input.
    pub inputs: Vec<Vec<f64>>,
    pub t0: f64,
    pub t1: f64,
    pub h: f64,
}

impl NumericScenario {
    fn check(&self, model: &ControlModel) -> Result<(), VerifyError> {
        if self.x0.len() != model.n() || self.theta.len() != model.k() || self.inputs.len() != model.m() {
            return Err(VerifyError::Scenario("dimension mismatch with the model".into()));
        }
        if !(self.t1 > self.t0) || !(self.h > 0.0) {
            return Err(VerifyError::Scenario("need t1 > t0 and h > 0".into()));
        }
        Ok(())
    }

    fn input_at(&self, t: f64) -> Vec<Complex64> {
        self.inputs.iter().map(|cs| c(cs.iter().rev().fold(0.0, |acc, a| acc * t + a))).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<Complex64>>,
    pub outputs: Vec<Vec<Complex64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationResult {
    pub max_abs: f64,
    pub max_rel: f64,
    pub tol: f64,
    pub pass: bool,
}

struct Compiled {
    rhs: Vec<CompiledRat>,
    outputs: Vec<CompiledRat>,
}

impl Compiled {
    fn new(model: &ControlModel) -> Self {
        Compiled {
            rhs: model.rhs.iter().map(CompiledRat::new).collect(),
            outputs: model.outputs.iter().map(|(_, h)| CompiledRat::new(h)).collect(),
        }
    }
}

fn point(model: &ControlModel, t: f64, x: &[Complex64], u: &[Complex64], theta: &[Complex64]) -> Vec<Complex64> {
    let mut pt = vec![c(0.0); model.nvars()];
    pt[0] = c(t);
    for (i, v) in x.iter().enumerate() {
        pt[model.state_var(i)] = *v;
    }
    for (j, v) in u.iter().enumerate() {
        pt[model.input_var(j)] = *v;
    }
    for (j, v) in theta.iter().enumerate() {
        pt[model.param_var(j)] = *v;
    }
    pt
}

fn integrate(
    model: &ControlModel,
    comp: &Compiled,
    sc: &NumericScenario,
    x0: &[Complex64],
    theta: &[Complex64],
) -> Result<Trajectory, VerifyError> {
    let field = |t: f64, x: &[Complex64]| -> Result<Vec<Complex64>, VerifyError> {
        let pt = point(model, t, x, &sc.input_at(t), theta);
        comp.rhs.iter().map(|f| f.eval(&pt).ok_or(VerifyError::SingularStep { t })).collect()
    };
    let observe = |t: f64, x: &[Complex64]| -> Result<Vec<Complex64>, VerifyError> {
        let pt = point(model, t, x, &sc.input_at(t), theta);
        comp.outputs.iter().map(|h| h.eval(&pt).ok_or(VerifyError::SingularStep { t })).collect()
    };
    let steps = ((sc.t1 - sc.t0) / sc.h).round() as usize;
    let mut traj = Trajectory { times: Vec::with_capacity(steps + 1), states: Vec::new(), outputs: Vec::new() };
    let mut x = x0.to_vec();
    let axpy = |x: &[Complex64], k: &[Complex64], s: f64| -> Vec<Complex64> {
        x.iter().zip(k).map(|(a, b)| a + b * s).collect()
    };
    for s in 0..=steps {
        let t = sc.t0 + s as f64 * sc.h;
        if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(VerifyError::NonFinite { t });
        }
        traj.times.push(t);
        traj.outputs.push(observe(t, &x)?);
        traj.states.push(x.clone());
        if s == steps {
            break;
        }
        let h = sc.h;
        let k1 = field(t, &x)?;
        let k2 = field(t + h / 2.0, &axpy(&x, &k1, h / 2.0))?;
        let k3 = field(t + h / 2.0, &axpy(&x, &k2, h / 2.0))?;
        let k4 = field(t + h, &axpy(&x, &k3, h))?;
        for i in 0..x.len() {
            x[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
        }
    }
    Ok(traj)
}

/// Classical fixed-step RK4 from the scenario's real initial point.
pub fn rk4_integrate(model: &ControlModel, sc: &NumericScenario) -> Result<Trajectory, VerifyError> {
    sc.check(model)?;
    let x0: Vec<Complex64> = sc.x0.iter().map(|&v| c(v)).collect();
    let th: Vec<Complex64> = sc.theta.iter().map(|&v| c(v)).collect();
    integrate(model, &Compiled::new(model), sc, &x0, &th)
}

/// Compares outputs of the original scenario with the system started at
/// `(x̃0, θ̃)`, which may be complex for non-real transformations. Passes when
/// the deviation is at most `tol·max(1, max|y|)`.
pub fn numeric_invariance(
    model: &ControlModel,
    sc: &NumericScenario,
    x0_t: &[Complex64],
    theta_t: &[Complex64],
    tol: f64,
) -> Result<VerificationResult, VerifyError> {
    sc.check(model)?;
    let comp = Compiled::new(model);
    let x0: Vec<Complex64> = sc.x0.iter().map(|&v| c(v)).collect();
    let th: Vec<Complex64> = sc.theta.iter().map(|&v| c(v)).collect();
    // A blow-up of the original trajectory says nothing about the symmetry,
    // so the horizon is halved before the blow-up time and the comparison
    // retried. A blow-up on the transformed side alone is still an error.
    let mut sc = sc.clone();
    let a = loop {
        match integrate(model, &comp, &sc, &x0, &th) {
            Err(VerifyError::NonFinite { t }) if (t - sc.t0) / 2.0 >= 100.0 * sc.h => {
                sc.t1 = sc.t0 + ((t - sc.t0) / 2.0 / sc.h).floor() * sc.h;
            }
            r => break r?,
        }
    };
    let b = integrate(model, &comp, &sc, x0_t, theta_t)?;
    let mut max_abs: f64 = 0.0;
    let mut ymax: f64 = 0.0;
    for (ya, yb) in a.outputs.iter().zip(&b.outputs) {
        for (p, q) in ya.iter().zip(yb) {
            max_abs = max_abs.max((p - q).norm());
            ymax = ymax.max(p.norm());
        }
    }
    let max_rel = max_abs / ymax.max(1.0);
    Ok(VerificationResult { max_abs, max_rel, tol, pass: max_rel <= tol })
}

/// Evaluates explicit maps at the scenario's initial point and runs
/// [`numeric_invariance`].
pub fn numeric_invariance_explicit(
    model: &ControlModel,
    states: &[RatFunc],
    params: &[RatFunc],
    sc: &NumericScenario,
    tol: f64,
) -> Result<VerificationResult, VerifyError> {
    sc.check(model)?;
    let x0: Vec<Complex64> = sc.x0.iter().map(|&v| c(v)).collect();
    let th: Vec<Complex64> = sc.theta.iter().map(|&v| c(v)).collect();
    let pt = point(model, sc.t0, &x0, &sc.input_at(sc.t0), &th);
    let image = |r: &RatFunc| {
        CompiledRat::new(r)
            .eval(&pt)
            .ok_or_else(|| VerifyError::Denominator(format!("map denominator vanishes at the scenario point: {}", r.fmt_with_names(model.registry().names()))))
    };
    let xt = states.iter().map(image).collect::<Result<Vec<_>, _>>()?;
    let tt = params.iter().map(image).collect::<Result<Vec<_>, _>>()?;
    numeric_invariance(model, sc, &xt, &tt, tol)
}

/// Seeded scenarios on `t ∈ [0, 10]` with `h = 10⁻³`. A fixed parameter
/// point (from a specialization) replaces the random draw.
pub fn random_scenarios(model: &ControlModel, seed: u64, count: usize, theta: Option<&[f64]>) -> Vec<NumericScenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5ce2);
    (0..count)
        .map(|_| NumericScenario {
            x0: (0..model.n()).map(|_| rng.gen_range(0.2..1.2)).collect(),
            theta: match theta {
                Some(t) => t.to_vec(),
                None => (0..model.k()).map(|_| rng.gen_range(0.3..2.7)).collect(),
            },
            inputs: (0..model.m()).map(|_| vec![rng.gen_range(0.5..1.5), rng.gen_range(0.0..0.2)]).collect(),
            t0: 0.0,
            t1: 10.0,
            h: 1e-3,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_expr, parse_model};

    fn load(src: &str) -> ControlModel {
        parse_model(src).unwrap()
    }

    fn decay() -> ControlModel {
        load("model decay {\n  states x\n  deq x' = -x\n  output y = x\n}\n")
    }

    #[test]
    fn original_blow_up_shortens_the_horizon() {
        // x' = x^2 from x0 = 1 blows up at t = 1.
        let m = load("model blow {\n  states x\n  deq x' = x^2\n  output y = x\n}\n");
        let sc = NumericScenario { x0: vec![1.0], theta: vec![], inputs: vec![], t0: 0.0, t1: 10.0, h: 1e-3 };
        let r = numeric_invariance(&m, &sc, &[c(1.0)], &[], 1e-8).unwrap();
        assert!(r.pass);
        assert!(numeric_invariance(&m, &sc, &[c(2.0)], &[], 1e-8).map_or(true, |r| !r.pass));
    }

    fn scenario(h: f64, t1: f64) -> NumericScenario {
        NumericScenario { x0: vec![1.0], theta: vec![], inputs: vec![], t0: 0.0, t1, h }
    }

    #[test]
    fn exponential_decay() {
        let tr = rk4_integrate(&decay(), &scenario(1e-3, 1.0)).unwrap();
        let x1 = tr.states.last().unwrap()[0].re;
        assert!((x1 - (-1.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn fourth_order_convergence() {
        // Richardson reference from the two finest grids.
        let end = |h: f64| rk4_integrate(&decay(), &scenario(h, 1.0)).unwrap().states.last().unwrap()[0].re;
        let (a, b, f) = (end(0.1), end(0.05), end(0.025));
        let reference = f + (f - b) / 15.0;
        let ratio = (a - reference).abs() / (b - reference).abs();
        assert!(ratio >= 12.0, "ratio {ratio}");
    }

    #[test]
    fn goodwin_smoke_matches_half_step() {
        let path = format!("{}/../../models/goodwin.sfm", env!("CARGO_MANIFEST_DIR"));
        let m = load(&std::fs::read_to_string(path).unwrap());
        let mut sc = NumericScenario {
            x0: vec![0.1, 0.2, 0.3],
            theta: vec![1.0, 0.5, 0.7],
            inputs: vec![],
            t0: 0.0,
            t1: 10.0,
            h: 1e-3,
        };
        let a = rk4_integrate(&m, &sc).unwrap();
        sc.h = 5e-4;
        let b = rk4_integrate(&m, &sc).unwrap();
        let (xa, xb) = (a.states.last().unwrap(), b.states.last().unwrap());
        for (p, q) in xa.iter().zip(xb) {
            assert!(p.re.is_finite() && (p - q).norm() < 1e-10);
        }
    }

    #[test]
    fn singular_map_is_a_precondition_error() {
        let path = format!("{}/../../models/goodwin.sfm", env!("CARGO_MANIFEST_DIR"));
        let m = load(&std::fs::read_to_string(path).unwrap());
        let p = |s: &str| parse_expr(s, m.registry()).unwrap();
        let states = vec![p("X"), p("Y + Z*(k2 - k3)/k1"), p("Z")];
        let params = vec![p("k1"), p("k3"), p("k2")];
        let sc = NumericScenario {
            x0: vec![0.1, 0.2, 0.3],
            theta: vec![0.0, 0.5, 0.7],
            inputs: vec![],
            t0: 0.0,
            t1: 1.0,
            h: 1e-3,
        };
        assert!(matches!(
            numeric_invariance_explicit(&m, &states, &params, &sc, 1e-8),
            Err(VerifyError::Denominator(_))
        ));
    }

    #[test]
    fn identity_deviation_is_exactly_zero() {
        let m = decay();
        let r = numeric_invariance_explicit(&m, &[RatFunc::var(2, 1)], &[], &scenario(1e-3, 2.0), 1e-8).unwrap();
        assert_eq!(r.max_abs, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn bad_scenario_rejected() {
        let mut sc = scenario(1e-3, 1.0);
        sc.t1 = 0.0;
        assert!(matches!(rk4_integrate(&decay(), &sc), Err(VerifyError::Scenario(_))));
    }
}

//! Independent checks of claimed symmetries: exact residuals of the
//! invariance conditions and an RK4 output-trajectory oracle.

mod numeric;

pub use numeric::{
    numeric_invariance, numeric_invariance_explicit, random_scenarios, rk4_integrate, CompiledRat, NumericScenario,
    Trajectory, VerificationResult,
};

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::algsolve::{GroebnerBasis, Ring};
use crate::cas::{CasError, MPoly, RatFunc, Rational};
use crate::model::ControlModel;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("transformation has a vanishing denominator: {0}")]
    Denominator(String),
    #[error("denominator vanishes at t = {t}")]
    SingularStep { t: f64 },
    #[error("non-finite value at t = {t}")]
    NonFinite { t: f64 },
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("map count mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
}

impl From<CasError> for VerifyError {
    fn from(e: CasError) -> Self {
        VerifyError::Denominator(e.to_string())
    }
}

/// One invariance condition evaluated on a transformation.
#[derive(Debug, Clone, Serialize)]
pub struct Residual {
    pub condition: String,
    #[serde(skip)]
    pub value: RatFunc,
    pub text: String,
}

/// `f`, `h` with θ replaced by the given point, for specialized analyses.
pub fn specialize_model(model: &ControlModel, theta: &[Rational]) -> ControlModel {
    let bind: Vec<(usize, RatFunc)> = theta
        .iter()
        .enumerate()
        .map(|(j, v)| (model.param_var(j), RatFunc::constant(model.nvars(), v.clone())))
        .collect();
    let sub = |r: &RatFunc| r.substitute(&bind).expect("constant substitution keeps denominators nonzero");
    let mut out = model.clone();
    out.rhs = model.rhs.iter().map(sub).collect();
    out.outputs = model.outputs.iter().map(|(n, h)| (n.clone(), sub(h))).collect();
    out
}

/// Total derivative along the vector field `f` with θ constant.
fn lie_derivative(model: &ControlModel, g: &RatFunc, rhs: &[RatFunc]) -> RatFunc {
    let mut acc = g.diff(model.time_var());
    for (i, f) in rhs.iter().enumerate() {
        let d = g.diff(model.state_var(i));
        if !d.is_zero() {
            acc = acc.add(&d.mul(f));
        }
    }
    acc
}

/// Vector field and outputs before (`flow`, `seen`) and after (`target`,
/// `target_out`) the transformation. They differ only when θ was specialized.
struct Sides<'a> {
    flow: &'a [RatFunc],
    target: &'a [RatFunc],
    seen: &'a [(String, RatFunc)],
    target_out: &'a [(String, RatFunc)],
}

fn residuals_over(
    model: &ControlModel,
    sides: &Sides,
    states: &[RatFunc],
    params: &[RatFunc],
    nv: usize,
) -> Result<Vec<Residual>, VerifyError> {
    if states.len() != model.n() {
        return Err(VerifyError::Shape { expected: model.n(), got: states.len() });
    }
    if params.len() != model.k() {
        return Err(VerifyError::Shape { expected: model.k(), got: params.len() });
    }
    let mut images: Vec<RatFunc> = (0..nv).map(|v| RatFunc::var(nv, v)).collect();
    for (i, x) in states.iter().enumerate() {
        images[model.state_var(i)] = x.clone();
    }
    for (j, p) in params.iter().enumerate() {
        images[model.param_var(j)] = p.clone();
    }
    let mut out = Vec::new();
    for (i, f) in sides.target.iter().enumerate() {
        let value = lie_derivative(model, &states[i], sides.flow).sub(&f.compose(&images, nv)?);
        out.push(Residual { condition: format!("state {}", model.states[i]), value, text: String::new() });
    }
    for (j, p) in params.iter().enumerate() {
        let value = lie_derivative(model, p, sides.flow);
        out.push(Residual { condition: format!("param {}", model.params[j]), value, text: String::new() });
    }
    for ((name, h), (_, h0)) in sides.target_out.iter().zip(sides.seen) {
        let value = h.compose(&images, nv)?.sub(h0);
        out.push(Residual { condition: format!("output {name}"), value, text: String::new() });
    }
    Ok(out)
}

/// Residuals of state invariance, Θ-constancy and output invariance for an
/// explicit transformation over the model registry. Passes iff all are zero.
pub fn symbolic_residual(model: &ControlModel, states: &[RatFunc], params: &[RatFunc]) -> Result<Vec<Residual>, VerifyError> {
    symbolic_residual_at(model, states, params, None)
}

/// [`symbolic_residual`] for maps found at a fixed parameter point: the
/// original flow runs at `theta`, the transformed one at `Θ`.
pub fn symbolic_residual_at(
    model: &ControlModel,
    states: &[RatFunc],
    params: &[RatFunc],
    theta: Option<&[Rational]>,
) -> Result<Vec<Residual>, VerifyError> {
    let spec = theta.map(|t| specialize_model(model, t));
    let base = spec.as_ref().unwrap_or(model);
    let sides = Sides { flow: &base.rhs, target: &model.rhs, seen: &base.outputs, target_out: &model.outputs };
    let mut res = residuals_over(model, &sides, states, params, model.nvars())?;
    let names = model.registry().names().to_vec();
    for r in &mut res {
        r.text = r.value.fmt_with_names(&names);
    }
    Ok(res)
}

pub fn residual_passes(res: &[Residual]) -> bool {
    res.iter().all(|r| r.value.is_zero())
}

/// Residual check for a transformation given implicitly by a prime lex basis
/// in the ansatz unknowns: every coefficient of every residual numerator
/// must reduce to zero modulo the basis.
///
/// `state_ansatz`/`param_ansatz` are the maps written over
/// `[model registry, unknowns]`.
pub fn residual_modulo(
    model: &ControlModel,
    theta: Option<&[Rational]>,
    state_ansatz: &[MPoly],
    param_ansatz: &[MPoly],
    lex: &GroebnerBasis,
) -> Result<bool, VerifyError> {
    let nm = model.nvars();
    let nu = lex.ring.n;
    let nv = nm + nu;
    let ident: Vec<usize> = (0..nm).collect();
    let lift = |r: &RatFunc| r.remap(nv, &ident);
    let spec = theta.map(|t| specialize_model(model, t));
    let base = spec.as_ref().unwrap_or(model);
    let rhs: Vec<RatFunc> = model.rhs.iter().map(lift).collect();
    let outputs: Vec<(String, RatFunc)> = model.outputs.iter().map(|(n, h)| (n.clone(), lift(h))).collect();
    let flow: Vec<RatFunc> = base.rhs.iter().map(lift).collect();
    let seen: Vec<(String, RatFunc)> = base.outputs.iter().map(|(n, h)| (n.clone(), lift(h))).collect();
    let sides = Sides { flow: &flow, target: &rhs, seen: &seen, target_out: &outputs };
    let states: Vec<RatFunc> = state_ansatz.iter().map(|p| RatFunc::from_poly(p.clone())).collect();
    let params: Vec<RatFunc> = param_ansatz.iter().map(|p| RatFunc::from_poly(p.clone())).collect();
    let res = residuals_over(model, &sides, &states, &params, nv)?;
    let k = model.k();
    let ring: &Ring = &lex.ring;
    // Non-parameter model variables are coordinates; their coefficients must vanish.
    let coords: Vec<usize> = (0..nm).filter(|&v| !(0..k).any(|j| model.param_var(j) == v)).collect();
    let mut to_sys = vec![0usize; nv];
    for j in 0..k {
        to_sys[model.param_var(j)] = j;
    }
    for u in 0..nu {
        to_sys[nm + u] = k + u;
    }
    for r in &res {
        for (_, c) in r.value.num().coefficients_in(&coords) {
            let p = ring.from_mpoly(&c.remap(k + nu, &to_sys));
            if !lex.contains(&p) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

pub(crate) fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

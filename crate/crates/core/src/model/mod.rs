//! Control-system intermediate representation and the `.sfm` model language.

mod parse;
mod print;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cas::{RatFunc, VarKind, VarRegistry};

pub use parse::{parse_expr, parse_model};
pub use print::print_model;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("undeclared identifier `{name}` at {line}:{col}")]
    Undeclared { name: String, line: usize, col: usize },
    #[error("duplicate name `{name}` (line {line})")]
    Duplicate { name: String, line: usize },
    #[error("division by the zero polynomial at {line}:{col}")]
    ZeroDenominator { line: usize, col: usize },
    #[error("no equation given for state `{0}`")]
    MissingEquation(String),
    #[error("removed state `{state}` is still referenced by {by}")]
    RemovedStateReferenced { state: String, by: String },
    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },
    #[error("invalid options: {0}")]
    InvalidOptions(String),
}

/// A rational ODE control system `x' = f(t, x, u, θ)`, `y = h(t, x, u, θ)`.
///
/// All expressions live over a registry ordered `[t, states, inputs, params]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlModel {
    pub name: String,
    pub states: Vec<String>,
    pub inputs: Vec<String>,
    pub params: Vec<String>,
    pub rhs: Vec<RatFunc>,
    pub outputs: Vec<(String, RatFunc)>,
    registry: VarRegistry,
}

impl ControlModel {
    pub(crate) fn from_parts(
        name: String,
        states: Vec<String>,
        inputs: Vec<String>,
        params: Vec<String>,
        rhs: Vec<RatFunc>,
        outputs: Vec<(String, RatFunc)>,
    ) -> Self {
        let registry = Self::build_registry(&states, &inputs, &params);
        ControlModel { name, states, inputs, params, rhs, outputs, registry }
    }

    fn build_registry(states: &[String], inputs: &[String], params: &[String]) -> VarRegistry {
        let mut reg = VarRegistry::new();
        reg.push("t", VarKind::Time).expect("t");
        for s in states {
            reg.push(s, VarKind::State).expect("disjoint names");
        }
        for u in inputs {
            reg.push(u, VarKind::Input).expect("disjoint names");
        }
        for p in params {
            reg.push(p, VarKind::Parameter).expect("disjoint names");
        }
        reg
    }

    pub fn registry(&self) -> &VarRegistry {
        &self.registry
    }

    pub fn nvars(&self) -> usize {
        self.registry.len()
    }

    pub fn n(&self) -> usize {
        self.states.len()
    }

    pub fn m(&self) -> usize {
        self.inputs.len()
    }

    pub fn k(&self) -> usize {
        self.params.len()
    }

    pub fn l(&self) -> usize {
        self.outputs.len()
    }

    pub const fn time_var(&self) -> usize {
        0
    }

    pub fn state_var(&self, i: usize) -> usize {
        1 + i
    }

    pub fn input_var(&self, j: usize) -> usize {
        1 + self.n() + j
    }

    pub fn param_var(&self, j: usize) -> usize {
        1 + self.n() + self.m() + j
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|s| s == name)
    }

    /// Maximum total degree of `f` and `h` in the input variables.
    pub fn input_degree(&self) -> u32 {
        let ins: Vec<usize> = (0..self.m()).map(|j| self.input_var(j)).collect();
        self.rhs
            .iter()
            .chain(self.outputs.iter().map(|(_, h)| h))
            .map(|e| {
                e.num()
                    .terms()
                    .iter()
                    .map(|(ex, _)| ins.iter().map(|&v| ex[v] as u32).sum::<u32>())
                    .max()
                    .unwrap_or(0)
            })
            .max()
            .unwrap_or(0)
    }

    /// True when no expression depends on `t` explicitly.
    pub fn is_autonomous(&self) -> bool {
        self.rhs.iter().chain(self.outputs.iter().map(|(_, h)| h)).all(|e| !e.contains_var(0))
    }
}

/// One violated model invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub location: String,
    pub message: String,
}

/// Returns one finding per violated invariant; empty when the model is valid.
pub fn validate_model(mdl: &ControlModel) -> Vec<Finding> {
    let mut out = Vec::new();
    if mdl.n() == 0 {
        out.push(Finding { location: "states".into(), message: "model has no states".into() });
    }
    if mdl.l() == 0 {
        out.push(Finding { location: "outputs".into(), message: "model has no outputs".into() });
    }
    let mut names = BTreeSet::new();
    for s in mdl.states.iter().chain(&mdl.inputs).chain(&mdl.params).chain(mdl.outputs.iter().map(|(n, _)| n)) {
        if !names.insert(s.as_str()) || s == "t" {
            out.push(Finding { location: s.clone(), message: format!("name `{s}` is not unique") });
        }
    }
    if mdl.rhs.len() != mdl.n() {
        out.push(Finding { location: "deq".into(), message: "equation count differs from state count".into() });
    }
    let exprs = mdl
        .states
        .iter()
        .zip(&mdl.rhs)
        .map(|(s, f)| (format!("{s}'"), f))
        .chain(mdl.outputs.iter().map(|(n, h)| (n.clone(), h)));
    for (loc, e) in exprs {
        if e.den().is_zero() {
            out.push(Finding { location: loc.clone(), message: "zero denominator".into() });
        }
        for j in 0..mdl.m() {
            if e.den().contains_var(mdl.input_var(j)) {
                out.push(Finding {
                    location: loc.clone(),
                    message: format!("rhs not polynomial in input {}", mdl.inputs[j]),
                });
            }
        }
    }
    out
}

/// Settings shared by all analysis stages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub deg_x: u32,
    pub deg_t: u32,
    pub deg_xi: u32,
    pub theta_independent_of_x: bool,
    pub fixed_params: BTreeSet<String>,
    pub specialize_seed: Option<u64>,
    pub removed_states: Vec<String>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            deg_x: 1,
            deg_t: 0,
            deg_xi: 2,
            theta_independent_of_x: true,
            fixed_params: BTreeSet::new(),
            specialize_seed: None,
            removed_states: Vec::new(),
        }
    }
}

impl AnalysisOptions {
    /// Checks the options against a model (before state removal).
    pub fn check(&self, mdl: &ControlModel) -> Result<(), ModelError> {
        for p in &self.fixed_params {
            if mdl.param_index(p).is_none() {
                return Err(ModelError::UnknownName { kind: "parameter", name: p.clone() });
            }
        }
        for s in &self.removed_states {
            if mdl.state_index(s).is_none() {
                return Err(ModelError::UnknownName { kind: "state", name: s.clone() });
            }
        }
        if self.removed_states.len() >= mdl.n() && !self.removed_states.is_empty() {
            return Err(ModelError::InvalidOptions("cannot remove every state".into()));
        }
        Ok(())
    }
}

/// Deletes `opts.removed_states` and their equations.
pub fn reduce_model(mdl: &ControlModel, opts: &AnalysisOptions) -> Result<ControlModel, ModelError> {
    opts.check(mdl)?;
    if opts.removed_states.is_empty() {
        return Ok(mdl.clone());
    }
    let removed: BTreeSet<usize> = opts
        .removed_states
        .iter()
        .map(|s| mdl.state_index(s).expect("checked"))
        .collect();
    for (i, f) in mdl.rhs.iter().enumerate() {
        if removed.contains(&i) {
            continue;
        }
        for &r in &removed {
            if f.contains_var(mdl.state_var(r)) {
                return Err(ModelError::RemovedStateReferenced {
                    state: mdl.states[r].clone(),
                    by: format!("{}'", mdl.states[i]),
                });
            }
        }
    }
    for (name, h) in &mdl.outputs {
        for &r in &removed {
            if h.contains_var(mdl.state_var(r)) {
                return Err(ModelError::RemovedStateReferenced { state: mdl.states[r].clone(), by: name.clone() });
            }
        }
    }
    let keep: Vec<usize> = (0..mdl.n()).filter(|i| !removed.contains(i)).collect();
    let states: Vec<String> = keep.iter().map(|&i| mdl.states[i].clone()).collect();
    let tmp = ControlModel::from_parts(
        mdl.name.clone(),
        states,
        mdl.inputs.clone(),
        mdl.params.clone(),
        Vec::new(),
        Vec::new(),
    );
    // Old variable index -> new index; removed states map to a dummy slot that never occurs.
    let mut mapping = vec![0usize; mdl.nvars()];
    mapping[0] = 0;
    for (new_i, &old_i) in keep.iter().enumerate() {
        mapping[mdl.state_var(old_i)] = tmp.state_var(new_i);
    }
    for j in 0..mdl.m() {
        mapping[mdl.input_var(j)] = tmp.input_var(j);
    }
    for j in 0..mdl.k() {
        mapping[mdl.param_var(j)] = tmp.param_var(j);
    }
    let nv = tmp.nvars();
    let rhs = keep.iter().map(|&i| mdl.rhs[i].remap(nv, &mapping)).collect();
    let outputs = mdl.outputs.iter().map(|(n, h)| (n.clone(), h.remap(nv, &mapping))).collect();
    Ok(ControlModel { rhs, outputs, ..tmp })
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOODWIN: &str = "model goodwin {\n  states X, Y, Z\n  params k1, k2, k3\n  deq X' = 1/(1+Z^4) - X\n  deq Y' = X - k2*Y\n  deq Z' = k1*Y - k3*Z\n  output y = X\n}\n";

    const SEIRQ: &str = "model seirq {
  states S, E, I, Q, R
  params beta, nu, psi, gamma
  deq S' = -beta*S*I
  deq E' = beta*S*I - nu*E
  deq I' = nu*E - psi*I - (1-psi)*gamma*I
  deq Q' = psi*I - gamma*Q
  deq R' = (1-psi)*gamma*I + gamma*Q
  output y = Q
}";

    #[test]
    fn goodwin_shape() {
        let m = parse_model(GOODWIN).unwrap();
        assert_eq!((m.n(), m.k(), m.m(), m.l()), (3, 3, 0, 1));
        assert!(validate_model(&m).is_empty());
        assert_eq!(m.input_degree(), 0);
    }

    #[test]
    fn zero_denominator_rejected() {
        let src = "model z {\n states X\n params a\n deq X' = 1/0\n output y = X\n}";
        assert!(matches!(parse_model(src), Err(ModelError::ZeroDenominator { line: 4, .. })));
        let src = "model z {\n states X\n params a\n deq X' = X/(a-a)\n output y = X\n}";
        assert!(matches!(parse_model(src), Err(ModelError::ZeroDenominator { .. })));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let src = "model z {\n states X\n params a\n deq X' = 0.5*X\n output y = X\n}";
        match parse_model(src) {
            Err(ModelError::Syntax { line, col, .. }) => assert_eq!((line, col), (4, 11)),
            other => panic!("{other:?}"),
        }
        let src = "model z {\n states X\n deq X' = b*X\n output y = X\n}";
        assert!(matches!(parse_model(src), Err(ModelError::Undeclared { ref name, line: 3, .. }) if name == "b"));
        let src = "model z {\n states X, X\n deq X' = X\n output y = X\n}";
        assert!(matches!(parse_model(src), Err(ModelError::Duplicate { .. })));
        let src = "model z {\n states X\n deq X' = X\n output y = X\n";
        assert!(matches!(parse_model(src), Err(ModelError::Syntax { .. })));
        let src = "model z {\n states X\n deq X' = X\n}";
        assert!(parse_model(src).is_err());
        let src = "model z {\n states X, Y\n deq X' = X\n output y = X\n}";
        assert!(matches!(parse_model(src), Err(ModelError::MissingEquation(_))));
    }

    #[test]
    fn precedence_rules() {
        let src = "model p {\n states x\n params a\n deq x' = -x^2 + 2^3^2 - a/2*x\n output y = x\n}";
        let m = parse_model(src).unwrap();
        let names = m.registry().names().to_vec();
        assert_eq!(m.rhs[0].fmt_with_names(&names), "-x^2 - 1/2*x*a + 512");
    }

    #[test]
    fn input_nonpolynomial_is_a_finding() {
        let src = "model q {\n states x\n inputs u\n deq x' = 1/u\n output y = x\n}";
        let m = parse_model(src).unwrap();
        let f = validate_model(&m);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].message, "rhs not polynomial in input u");
    }

    #[test]
    fn seirq_reduction() {
        let m = parse_model(SEIRQ).unwrap();
        let opts = AnalysisOptions { removed_states: vec!["R".into()], ..Default::default() };
        let r = reduce_model(&m, &opts).unwrap();
        assert_eq!(r.states, vec!["S", "E", "I", "Q"]);
        assert_eq!(r.rhs.len(), 4);
        let names = r.registry().names().to_vec();
        assert_eq!(r.outputs[0].1.fmt_with_names(&names), "Q");
        assert!(validate_model(&r).is_empty());

        assert_eq!(reduce_model(&m, &AnalysisOptions::default()).unwrap(), m);

        let bad = AnalysisOptions { removed_states: vec!["I".into()], ..Default::default() };
        assert!(matches!(reduce_model(&m, &bad), Err(ModelError::RemovedStateReferenced { .. })));
    }

    #[test]
    fn print_round_trip() {
        for src in [GOODWIN, SEIRQ] {
            let a = parse_model(src).unwrap();
            let b = parse_model(&print_model(&a)).unwrap();
            assert_eq!(a, b);
        }
    }
}

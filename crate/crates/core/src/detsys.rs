//! Determining systems for point symmetries of a control model.
//!
//! The finite system constrains the transformation `x~ = X(t, x, θ)`,
//! `θ~ = Θ(t, x, θ)` itself; the infinitesimal system constrains a generator
//! `ξ·∂x + ζ·∂θ`. Both are polynomial in first-order jets of the unknown
//! functions with coefficients polynomial in `(t, x, θ)` after the model's
//! denominators are cleared and the inputs are split off by coefficient
//! collection.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cas::{MPoly, RatFunc, VarKind, VarRegistry};
use crate::model::{AnalysisOptions, ControlModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetKind {
    Finite,
    Infinitesimal,
}

/// Unknown function whose jets appear in a determining system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "index")]
pub enum JetBase {
    /// Transformed state `X_i`.
    X(usize),
    /// Transformed parameter `Θ_j`.
    Theta(usize),
    /// Generator component on a state.
    Xi(usize),
    /// Generator component on a parameter.
    Zeta(usize),
}

/// First-order derivative index over `(t, x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "wrt", content = "state")]
pub enum JetDeriv {
    None,
    T,
    X(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct JetUnknown {
    pub base: JetBase,
    pub deriv: JetDeriv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionGroup {
    State,
    Parameter,
    Output,
    Fixed,
}

/// One invariance condition before input splitting, over
/// `[t, x, u, θ, jets]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub label: String,
    pub group: ConditionGroup,
    pub expr: RatFunc,
}

/// Conditions plus the registry they are written over.
#[derive(Debug, Clone)]
pub struct Conditions {
    pub kind: DetKind,
    pub registry: VarRegistry,
    pub jets: Vec<JetUnknown>,
    pub conditions: Vec<Condition>,
    n: usize,
    m: usize,
    k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equation {
    pub label: String,
    pub group: ConditionGroup,
    pub poly: MPoly,
}

/// Determining system over the registry `[t, x, θ, jets]`.
#[derive(Debug, Clone)]
pub struct DeterminingSystem {
    pub kind: DetKind,
    pub registry: VarRegistry,
    pub jets: Vec<JetUnknown>,
    pub equations: Vec<Equation>,
    /// Denominators multiplied out while clearing; each must be nonzero.
    pub cleared_denominators: Vec<MPoly>,
    pub options: AnalysisOptions,
    pub n: usize,
    pub k: usize,
}

impl DeterminingSystem {
    pub fn jet_offset(&self) -> usize {
        1 + self.n + self.k
    }

    pub fn jet_var(&self, j: &JetUnknown) -> Option<usize> {
        self.jets.iter().position(|x| x == j).map(|p| p + self.jet_offset())
    }

    /// Equations from state and output conditions only.
    pub fn state_output_count(&self) -> usize {
        self.equations
            .iter()
            .filter(|e| matches!(e.group, ConditionGroup::State | ConditionGroup::Output))
            .count()
    }

    /// Evaluates every equation after binding each jet to an expression over
    /// `[t, x, θ]`; used to check that a candidate solves the system.
    pub fn residuals(&self, bind: impl Fn(&JetUnknown) -> MPoly) -> Vec<MPoly> {
        let nv = 1 + self.n + self.k;
        let mut images: Vec<Option<MPoly>> = (0..nv).map(|i| Some(MPoly::var(nv, i))).collect();
        images.extend(self.jets.iter().map(|j| Some(bind(j))));
        self.equations.iter().map(|e| e.poly.compose(&images, nv)).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let names = self.registry.names().to_vec();
        let glossary: BTreeMap<String, JetUnknown> = self
            .jets
            .iter()
            .enumerate()
            .map(|(i, j)| (names[self.jet_offset() + i].clone(), *j))
            .collect();
        serde_json::json!({
            "kind": self.kind,
            "equations": self.equations.iter().map(|e| serde_json::json!({
                "label": e.label,
                "group": e.group,
                "poly": e.poly.fmt_with_names(&names),
            })).collect::<Vec<_>>(),
            "jets": glossary,
            "cleared_denominators": self.cleared_denominators.iter()
                .map(|d| d.fmt_with_names(&names)).collect::<Vec<_>>(),
        })
    }

    pub fn to_text(&self) -> String {
        let names = self.registry.names().to_vec();
        let mut s = String::new();
        for e in &self.equations {
            s.push_str(&format!("{}: {} = 0\n", e.label, e.poly.fmt_with_names(&names)));
        }
        for d in &self.cleared_denominators {
            s.push_str(&format!("nondegenerate: {} != 0\n", d.fmt_with_names(&names)));
        }
        s
    }
}

fn jet_name(mdl: &ControlModel, j: &JetUnknown) -> String {
    let base = match j.base {
        JetBase::X(i) => format!("{}~", mdl.states[i]),
        JetBase::Theta(i) => format!("{}~", mdl.params[i]),
        JetBase::Xi(i) => format!("xi_{}", mdl.states[i]),
        JetBase::Zeta(i) => format!("zeta_{}", mdl.params[i]),
    };
    match j.deriv {
        JetDeriv::None => base,
        JetDeriv::T => format!("{base}_t"),
        JetDeriv::X(m) => format!("{base}_{}", mdl.states[m]),
    }
}

fn jets_for(mdl: &ControlModel, opts: &AnalysisOptions, kind: DetKind) -> Vec<JetUnknown> {
    let (sb, pb): (fn(usize) -> JetBase, fn(usize) -> JetBase) = match kind {
        DetKind::Finite => (JetBase::X, JetBase::Theta),
        DetKind::Infinitesimal => (JetBase::Xi, JetBase::Zeta),
    };
    let mut out = Vec::new();
    for i in 0..mdl.n() {
        out.push(JetUnknown { base: sb(i), deriv: JetDeriv::None });
        out.push(JetUnknown { base: sb(i), deriv: JetDeriv::T });
        for m in 0..mdl.n() {
            out.push(JetUnknown { base: sb(i), deriv: JetDeriv::X(m) });
        }
    }
    for j in 0..mdl.k() {
        out.push(JetUnknown { base: pb(j), deriv: JetDeriv::None });
        out.push(JetUnknown { base: pb(j), deriv: JetDeriv::T });
        if !opts.theta_independent_of_x {
            for m in 0..mdl.n() {
                out.push(JetUnknown { base: pb(j), deriv: JetDeriv::X(m) });
            }
        }
    }
    out
}

fn full_registry(mdl: &ControlModel, jets: &[JetUnknown]) -> VarRegistry {
    let mut reg = mdl.registry().clone();
    for j in jets {
        let kind = VarKind::Jet;
        reg.push(&jet_name(mdl, j), kind).expect("jet names are distinct from model names");
    }
    reg
}

struct Ctx<'a> {
    mdl: &'a ControlModel,
    jets: Vec<JetUnknown>,
    nv: usize,
}

impl<'a> Ctx<'a> {
    fn jet(&self, base: JetBase, deriv: JetDeriv) -> RatFunc {
        let pos = self
            .jets
            .iter()
            .position(|j| j.base == base && j.deriv == deriv)
            .expect("jet registered");
        RatFunc::var(self.nv, self.mdl.nvars() + pos)
    }

    fn has_jet(&self, base: JetBase, deriv: JetDeriv) -> bool {
        self.jets.iter().any(|j| j.base == base && j.deriv == deriv)
    }

    /// Lifts an expression over the model registry into the jet registry.
    fn lift(&self, e: &RatFunc) -> RatFunc {
        let mapping: Vec<usize> = (0..self.mdl.nvars()).collect();
        e.remap(self.nv, &mapping)
    }

    /// `D_t g = g_t + Σ g_{x_m} f_m` for a jet base `g`, where only jets present contribute.
    fn total_derivative(&self, base: JetBase, f: &[RatFunc]) -> RatFunc {
        let mut acc = self.jet(base, JetDeriv::T);
        for (m, fm) in f.iter().enumerate() {
            if self.has_jet(base, JetDeriv::X(m)) {
                acc = acc.add(&self.jet(base, JetDeriv::X(m)).mul(fm));
            }
        }
        acc
    }
}

/// Symbolic invariance conditions of the finite determining system.
pub fn prolong_finite(mdl: &ControlModel, opts: &AnalysisOptions) -> Conditions {
    let jets = jets_for(mdl, opts, DetKind::Finite);
    let registry = full_registry(mdl, &jets);
    let nv = registry.len();
    let ctx = Ctx { mdl, jets: jets.clone(), nv };
    let f: Vec<RatFunc> = mdl.rhs.iter().map(|e| ctx.lift(e)).collect();

    // Images for evaluating model expressions at the transformed point.
    let mut images: Vec<RatFunc> = (0..mdl.nvars()).map(|v| RatFunc::var(nv, v)).collect();
    for i in 0..mdl.n() {
        images[mdl.state_var(i)] = ctx.jet(JetBase::X(i), JetDeriv::None);
    }
    for j in 0..mdl.k() {
        images[mdl.param_var(j)] = ctx.jet(JetBase::Theta(j), JetDeriv::None);
    }

    let mut conditions = Vec::new();
    for i in 0..mdl.n() {
        let lhs = ctx.total_derivative(JetBase::X(i), &f);
        let rhs = mdl.rhs[i].compose(&images, nv).expect("transformed denominator is a nonzero polynomial");
        conditions.push(Condition {
            label: format!("state {}", mdl.states[i]),
            group: ConditionGroup::State,
            expr: lhs.sub(&rhs),
        });
    }
    for j in 0..mdl.k() {
        conditions.push(Condition {
            label: format!("param {}", mdl.params[j]),
            group: ConditionGroup::Parameter,
            expr: ctx.total_derivative(JetBase::Theta(j), &f),
        });
    }
    for (name, h) in &mdl.outputs {
        let ht = h.compose(&images, nv).expect("transformed denominator is a nonzero polynomial");
        conditions.push(Condition {
            label: format!("output {name}"),
            group: ConditionGroup::Output,
            expr: ctx.lift(h).sub(&ht),
        });
    }
    for p in &opts.fixed_params {
        if let Some(j) = mdl.param_index(p) {
            conditions.push(Condition {
                label: format!("fixed {p}"),
                group: ConditionGroup::Fixed,
                expr: ctx.jet(JetBase::Theta(j), JetDeriv::None).sub(&RatFunc::var(nv, mdl.param_var(j))),
            });
        }
    }
    Conditions { kind: DetKind::Finite, registry, jets, conditions, n: mdl.n(), m: mdl.m(), k: mdl.k() }
}

/// Symbolic conditions of the infinitesimal (linearized) determining system.
pub fn prolong_infinitesimal(mdl: &ControlModel, opts: &AnalysisOptions) -> Conditions {
    let jets = jets_for(mdl, opts, DetKind::Infinitesimal);
    let registry = full_registry(mdl, &jets);
    let nv = registry.len();
    let ctx = Ctx { mdl, jets: jets.clone(), nv };
    let f: Vec<RatFunc> = mdl.rhs.iter().map(|e| ctx.lift(e)).collect();

    // Applies the generator V = ξ·∂x + ζ·∂θ to an expression.
    let apply_v = |e: &RatFunc| -> RatFunc {
        let mut acc = RatFunc::zero(nv);
        for m in 0..mdl.n() {
            let d = e.diff(mdl.state_var(m));
            if !d.is_zero() {
                acc = acc.add(&ctx.jet(JetBase::Xi(m), JetDeriv::None).mul(&d));
            }
        }
        for j in 0..mdl.k() {
            let d = e.diff(mdl.param_var(j));
            if !d.is_zero() {
                acc = acc.add(&ctx.jet(JetBase::Zeta(j), JetDeriv::None).mul(&d));
            }
        }
        acc
    };

    let mut conditions = Vec::new();
    for i in 0..mdl.n() {
        let lhs = ctx.total_derivative(JetBase::Xi(i), &f);
        conditions.push(Condition {
            label: format!("state {}", mdl.states[i]),
            group: ConditionGroup::State,
            expr: lhs.sub(&apply_v(&f[i])),
        });
    }
    for j in 0..mdl.k() {
        conditions.push(Condition {
            label: format!("param {}", mdl.params[j]),
            group: ConditionGroup::Parameter,
            expr: ctx.total_derivative(JetBase::Zeta(j), &f),
        });
    }
    for (name, h) in &mdl.outputs {
        conditions.push(Condition {
            label: format!("output {name}"),
            group: ConditionGroup::Output,
            expr: apply_v(&ctx.lift(h)),
        });
    }
    for p in &opts.fixed_params {
        if let Some(j) = mdl.param_index(p) {
            conditions.push(Condition {
                label: format!("fixed {p}"),
                group: ConditionGroup::Fixed,
                expr: ctx.jet(JetBase::Zeta(j), JetDeriv::None),
            });
        }
    }
    Conditions { kind: DetKind::Infinitesimal, registry, jets, conditions, n: mdl.n(), m: mdl.m(), k: mdl.k() }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DetsysError {
    #[error("condition `{0}` is not polynomial in the inputs")]
    NotPolynomialInInputs(String),
}

/// All exponent vectors over `m` variables with total degree at most `d`,
/// in graded order.
pub fn monomials_up_to(m: usize, d: u32) -> Vec<Vec<u16>> {
    let mut out = vec![vec![0u16; m]];
    let mut frontier = out.clone();
    for _ in 0..d {
        let mut next = Vec::new();
        for e in &frontier {
            let last = e.iter().rposition(|&k| k > 0).unwrap_or(0);
            for v in last..m {
                let mut e2 = e.clone();
                e2[v] += 1;
                next.push(e2);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Clears denominators and splits every condition by input monomials.
pub fn collect_input_coefficients(
    conds: &Conditions,
    opts: &AnalysisOptions,
) -> Result<DeterminingSystem, DetsysError> {
    let (n, m) = (conds.n, conds.m);
    let input_vars: Vec<usize> = (0..m).map(|j| 1 + n + j).collect();
    let nv_full = conds.registry.len();
    // Drop the inputs from the registry.
    let mut registry = VarRegistry::new();
    let mut mapping = vec![usize::MAX; nv_full];
    for v in 0..nv_full {
        if input_vars.contains(&v) {
            continue;
        }
        mapping[v] = registry.len();
        registry
            .push(conds.registry.name(v), conds.registry.kind(v))
            .expect("names unique");
    }
    let nv = registry.len();
    let remap = |p: &MPoly| -> MPoly {
        let safe: Vec<usize> = mapping.iter().map(|&x| if x == usize::MAX { 0 } else { x }).collect();
        p.remap(nv, &safe)
    };

    let max_deg = conds
        .conditions
        .iter()
        .map(|c| {
            c.expr
                .num()
                .terms()
                .iter()
                .map(|(e, _)| input_vars.iter().map(|&v| e[v] as u32).sum::<u32>())
                .max()
                .unwrap_or(0)
        })
        .max()
        .unwrap_or(0);
    let u_monos = monomials_up_to(m, max_deg);

    let mut equations = Vec::new();
    let mut cleared: Vec<MPoly> = Vec::new();
    for c in &conds.conditions {
        if input_vars.iter().any(|&v| c.expr.den().contains_var(v)) {
            return Err(DetsysError::NotPolynomialInInputs(c.label.clone()));
        }
        let den = c.expr.den();
        if !den.is_constant() {
            let d = remap(den);
            if !cleared.contains(&d) {
                cleared.push(d);
            }
        }
        let by_u: BTreeMap<Vec<u16>, MPoly> = c.expr.num().coefficients_in(&input_vars).into_iter().collect();
        let keep_zero = matches!(c.group, ConditionGroup::State | ConditionGroup::Output);
        for um in &u_monos {
            let coeff = by_u.get(um).cloned().unwrap_or_else(|| MPoly::zero(nv_full));
            if coeff.is_zero() && !keep_zero {
                continue;
            }
            let tag: Vec<String> = um
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(j, &k)| {
                    let name = conds.registry.name(input_vars[j]);
                    if k == 1 { name.to_string() } else { format!("{name}^{k}") }
                })
                .collect();
            let label = match (m, tag.is_empty()) {
                (0, _) => c.label.clone(),
                (_, true) => format!("{} [1]", c.label),
                _ => format!("{} [{}]", c.label, tag.join("*")),
            };
            equations.push(Equation {
                label,
                group: c.group,
                poly: remap(&coeff),
            });
        }
    }
    Ok(DeterminingSystem {
        kind: conds.kind,
        registry,
        jets: conds.jets.clone(),
        equations,
        cleared_denominators: cleared,
        options: opts.clone(),
        n,
        k: conds.k,
    })
}

pub fn build_finite_detsys(mdl: &ControlModel, opts: &AnalysisOptions) -> Result<DeterminingSystem, DetsysError> {
    collect_input_coefficients(&prolong_finite(mdl, opts), opts)
}

pub fn build_inf_detsys(mdl: &ControlModel, opts: &AnalysisOptions) -> Result<DeterminingSystem, DetsysError> {
    collect_input_coefficients(&prolong_infinitesimal(mdl, opts), opts)
}

/// Jet values of the identity transformation (finite) or the zero generator.
pub fn identity_jet(dsys: &DeterminingSystem, j: &JetUnknown) -> MPoly {
    let nv = 1 + dsys.n + dsys.k;
    match (j.base, j.deriv) {
        (JetBase::X(i), JetDeriv::None) => MPoly::var(nv, 1 + i),
        (JetBase::Theta(i), JetDeriv::None) => MPoly::var(nv, 1 + dsys.n + i),
        (JetBase::X(i), JetDeriv::X(m)) if i == m => MPoly::one(nv),
        _ => MPoly::zero(nv),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;

    fn load(name: &str) -> ControlModel {
        let path = format!("{}/../../models/{name}.sfm", env!("CARGO_MANIFEST_DIR"));
        parse_model(&std::fs::read_to_string(path).unwrap()).unwrap()
    }

    fn names(d: &DeterminingSystem) -> Vec<String> {
        d.registry.names().to_vec()
    }

    #[test]
    fn decay_prolongation() {
        let m = load("decay");
        let d = build_finite_detsys(&m, &AnalysisOptions::default()).unwrap();
        let nm = names(&d);
        let eqs: Vec<String> = d.equations.iter().map(|e| e.poly.fmt_with_names(&nm)).collect();
        assert_eq!(eqs, vec!["-x*x~_x + x~ + x~_t", "x - x~"]);
    }

    #[test]
    fn theta_condition_is_total_derivative() {
        let m = load("toy_sign");
        let opts = AnalysisOptions { theta_independent_of_x: false, ..Default::default() };
        let d = build_finite_detsys(&m, &opts).unwrap();
        let nm = names(&d);
        let p = d.equations.iter().find(|e| e.group == ConditionGroup::Parameter).unwrap();
        assert_eq!(p.poly.fmt_with_names(&nm), "-x*theta*theta~_x + theta~_t");
        let d = build_finite_detsys(&m, &AnalysisOptions::default()).unwrap();
        let p = d.equations.iter().find(|e| e.group == ConditionGroup::Parameter).unwrap();
        assert_eq!(p.poly.fmt_with_names(&names(&d)), "theta~_t");
    }

    #[test]
    fn goodwin_output_condition_is_algebraic() {
        let m = load("goodwin");
        let d = build_finite_detsys(&m, &AnalysisOptions::default()).unwrap();
        let out = d.equations.iter().find(|e| e.group == ConditionGroup::Output).unwrap();
        assert_eq!(out.poly.fmt_with_names(&names(&d)), "X - X~");
        assert_eq!(d.equations.len(), 3 + 3 + 1);
        // 1 + Z~^4 is the only denominator involving jets; 1 + Z^4 comes from f.
        assert!(d.cleared_denominators.len() >= 1);
    }

    #[test]
    fn mammillary_equation_count() {
        let m = load("mammillary4");
        let d = build_finite_detsys(&m, &AnalysisOptions::default()).unwrap();
        assert_eq!(d.state_output_count(), (4 + 1) * (1 + 1));
        let ui = d.registry.lookup("u");
        assert!(ui.is_none());
    }

    #[test]
    fn llw_state_condition_splits_by_input() {
        let m = load("llw1987");
        let d = build_finite_detsys(&m, &AnalysisOptions::default()).unwrap();
        let labels: Vec<&str> = d.equations.iter().map(|e| e.label.as_str()).collect();
        assert!(labels.contains(&"state x3 [1]"));
        assert!(labels.contains(&"state x3 [u]"));
    }

    #[test]
    fn identity_solves_every_corpus_system() {
        for name in ["decay", "toy_sign", "goodwin", "mammillary4", "llw1987", "seirq", "two_pool"] {
            let m = load(name);
            for fixed in [false, true] {
                let mut opts = AnalysisOptions::default();
                if fixed {
                    opts.fixed_params.extend(m.params.first().cloned());
                }
                for kind in [DetKind::Finite, DetKind::Infinitesimal] {
                    let d = match kind {
                        DetKind::Finite => build_finite_detsys(&m, &opts).unwrap(),
                        DetKind::Infinitesimal => build_inf_detsys(&m, &opts).unwrap(),
                    };
                    for r in d.residuals(|j| identity_jet(&d, j)) {
                        assert!(r.is_zero(), "{name}: nonzero identity residual");
                    }
                }
            }
        }
    }

    #[test]
    fn infinitesimal_equations_are_linear_and_input_free() {
        for name in ["goodwin", "mammillary4", "llw1987", "seirq"] {
            let m = load(name);
            let d = build_inf_detsys(&m, &AnalysisOptions::default()).unwrap();
            let off = d.jet_offset();
            for e in &d.equations {
                for (ex, _) in e.poly.terms() {
                    let jd: u32 = ex[off..].iter().map(|&k| k as u32).sum();
                    assert!(jd == 1, "{name}: {} not linear homogeneous", e.label);
                }
            }
        }
    }

    #[test]
    fn llw_scaling_generator_solves_infinitesimal_system() {
        let m = load("llw1987");
        let d = build_inf_detsys(&m, &AnalysisOptions::default()).unwrap();
        let nv = 1 + d.n + d.k;
        let x = |i: usize| MPoly::var(nv, 1 + i);
        let th = |i: usize| MPoly::var(nv, 1 + d.n + i);
        let res = d.residuals(|j| match (j.base, j.deriv) {
            (JetBase::Xi(0), JetDeriv::None) => x(0).neg(),
            (JetBase::Xi(0), JetDeriv::X(0)) => MPoly::from_int(nv, -1),
            (JetBase::Xi(1), JetDeriv::None) => x(1),
            (JetBase::Xi(1), JetDeriv::X(1)) => MPoly::one(nv),
            (JetBase::Zeta(1), JetDeriv::None) => th(1).neg(),
            (JetBase::Zeta(3), JetDeriv::None) => th(3),
            _ => MPoly::zero(nv),
        });
        assert!(res.iter().all(|r| r.is_zero()));
    }

    #[test]
    fn monomial_enumeration() {
        assert_eq!(monomials_up_to(2, 2).len(), 6);
        assert_eq!(monomials_up_to(0, 3), vec![Vec::<u16>::new()]);
        assert_eq!(monomials_up_to(3, 1).len(), 4);
    }
}

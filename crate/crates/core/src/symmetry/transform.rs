use num_complex::Complex64;
use serde::Serialize;

use crate::algsolve::{branch_points_c, Decomposition, GroebnerBasis, RealFlag, SolutionBranch};
use crate::ansatz::{AlgebraicSystem, UnknownRole};
use crate::cas::{MPoly, RatFunc, Rational};
use crate::model::ControlModel;
use crate::verify::{residual_modulo, residual_passes, symbolic_residual_at};

use super::SymmetryError;

/// One group element.
///
/// Degree-1 branches give explicit maps over the model registry. A branch of
/// degree `d > 1` gives `d` elements that share the branch's lex basis and are
/// told apart by `root`, the index of their solution at the reference point.
#[derive(Debug, Clone)]
pub struct SymmetryTransformation {
    pub branch: usize,
    pub root: Option<usize>,
    /// `X_i(t, x, θ)`, explicit elements only.
    pub states: Option<Vec<RatFunc>>,
    /// `Θ_j(θ)`, explicit elements only.
    pub params: Option<Vec<RatFunc>>,
    /// Ansatz unknown values over θ, explicit elements only.
    pub values: Option<Vec<RatFunc>>,
    pub is_identity: bool,
    pub real: RealFlag,
    pub moves_state: Vec<bool>,
    pub moves_param: Vec<bool>,
}

impl SymmetryTransformation {
    pub fn is_explicit(&self) -> bool {
        self.states.is_some()
    }
}

/// Explicit maps printed with model names.
#[derive(Debug, Clone, Serialize)]
pub struct PrintedMaps {
    pub states: Vec<(String, String)>,
    pub params: Vec<(String, String)>,
}

/// Extracted elements plus what is needed to evaluate them numerically.
#[derive(Debug, Clone)]
pub struct ElementSet {
    pub model: ControlModel,
    pub roles: Vec<UnknownRole>,
    pub unknown_names: Vec<String>,
    pub branches: Vec<SolutionBranch>,
    pub elements: Vec<SymmetryTransformation>,
    pub specialization: Option<Vec<Rational>>,
    /// Real parameter point at which algebraic roots are indexed.
    pub reference: Vec<f64>,
    pub(crate) ref_roots: Vec<Vec<Vec<Complex64>>>,
}

/// Map of a state or parameter as a polynomial in the ansatz unknowns,
/// over `[model registry, unknowns]`.
pub fn ansatz_maps(model: &ControlModel, roles: &[UnknownRole]) -> (Vec<MPoly>, Vec<MPoly>) {
    let nm = model.nvars();
    let nv = nm + roles.len();
    let mut states = vec![MPoly::zero(nv); model.n()];
    let mut params = vec![MPoly::zero(nv); model.k()];
    for (u, r) in roles.iter().enumerate() {
        let mut e = vec![0u16; nv];
        e[0] = r.t_deg;
        for (i, &d) in r.x_exps.iter().enumerate() {
            e[model.state_var(i)] = d;
        }
        e[nm + u] = 1;
        let term = MPoly::monomial(e, Rational::one());
        if r.on_param {
            params[r.index] = params[r.index].add(&term);
        } else {
            states[r.index] = states[r.index].add(&term);
        }
    }
    (states, params)
}

/// Explicit maps from unknown values over the k parameters.
fn explicit_maps(model: &ControlModel, roles: &[UnknownRole], values: &[RatFunc]) -> (Vec<RatFunc>, Vec<RatFunc>) {
    let nv = model.nvars();
    let to_model: Vec<usize> = (0..model.k()).map(|j| model.param_var(j)).collect();
    let mut states = vec![RatFunc::zero(nv); model.n()];
    let mut params = vec![RatFunc::zero(nv); model.k()];
    for (u, r) in roles.iter().enumerate() {
        if values[u].is_zero() {
            continue;
        }
        let mut e = vec![0u16; nv];
        e[0] = r.t_deg;
        for (i, &d) in r.x_exps.iter().enumerate() {
            e[model.state_var(i)] = d;
        }
        let term = values[u].remap(nv, &to_model).mul(&RatFunc::from_poly(MPoly::monomial(e, Rational::one())));
        let slot = if r.on_param { &mut params[r.index] } else { &mut states[r.index] };
        *slot = slot.add(&term);
    }
    (states, params)
}

fn identity_values(sys: &AlgebraicSystem) -> Vec<MPoly> {
    let id = sys.identity_point();
    match &sys.specialization {
        None => id,
        Some(pt) => {
            let vals: Vec<(usize, Rational)> = pt.iter().cloned().enumerate().collect();
            id.iter().map(|p| p.partial_eval(&vals)).collect()
        }
    }
}

/// `u − id(u)` for each unknown, over the algebraic-system registry.
fn displacement(sys: &AlgebraicSystem, u: usize, id: &[MPoly]) -> MPoly {
    MPoly::var(sys.nvars(), sys.unknown_var(u)).sub(&id[u])
}

fn moves(sys: &AlgebraicSystem, fixed_unknown: impl Fn(usize) -> bool) -> (Vec<bool>, Vec<bool>) {
    let moved = |on_param: bool, idx: usize| sys.unknowns_of(on_param, idx).into_iter().any(|u| !fixed_unknown(u));
    ((0..sys.n).map(|i| moved(false, i)).collect(), (0..sys.k).map(|j| moved(true, j)).collect())
}

fn values_as_mpoly(sys: &AlgebraicSystem, v: &RatFunc) -> Option<MPoly> {
    // Unknown values live over the k parameters; lift them to the system registry.
    let ident: Vec<usize> = (0..sys.k).collect();
    v.is_polynomial().then(|| v.num().remap(sys.nvars(), &ident))
}

/// Turns zero-dimensional branches into group elements, checking each one
/// against the invariance conditions.
pub fn extract_transformations(
    model: &ControlModel,
    sys: &AlgebraicSystem,
    dec: &Decomposition,
    reference: &[f64],
) -> Result<ElementSet, SymmetryError> {
    let id = identity_values(sys);
    let theta = sys.specialization.as_deref();
    let (state_ansatz, param_ansatz) = ansatz_maps(model, &sys.roles);
    let th: Vec<Complex64> = reference.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut elements = Vec::new();
    let mut ref_roots = Vec::new();
    for (b, br) in dec.branches.iter().enumerate() {
        if let Some(values) = &br.explicit {
            let (states, params) = explicit_maps(model, &sys.roles, values);
            let res = symbolic_residual_at(model, &states, &params, theta)?;
            if !residual_passes(&res) {
                let bad: Vec<String> = res.iter().filter(|r| !r.value.is_zero()).map(|r| format!("{}: {}", r.condition, r.text)).collect();
                return Err(SymmetryError::Internal(format!("branch {b} fails the invariance check ({})", bad.join("; "))));
            }
            let fixed = |u: usize| match values_as_mpoly(sys, &values[u]) {
                Some(p) => p == id[u],
                None => false,
            };
            let (ms, mp) = moves(sys, fixed);
            let is_identity = !ms.iter().chain(&mp).any(|&m| m);
            elements.push(SymmetryTransformation {
                branch: b,
                root: None,
                states: Some(states),
                params: Some(params),
                values: Some(values.clone()),
                is_identity,
                real: br.real,
                moves_state: ms,
                moves_param: mp,
            });
            ref_roots.push(Vec::new());
        } else {
            if !residual_modulo(model, theta, &state_ansatz, &param_ansatz, &br.lex)? {
                return Err(SymmetryError::Internal(format!("branch {b} fails the invariance check modulo its ideal")));
            }
            let fixed = |u: usize| br.lex.contains(&br.lex.ring.from_mpoly(&displacement(sys, u, &id)));
            let (ms, mp) = moves(sys, fixed);
            let mut roots = branch_points_c(&br.lex, &th);
            sort_points(&mut roots);
            if roots.len() != br.degree {
                return Err(SymmetryError::Numeric(format!(
                    "branch {b} has {} numeric solutions at the reference point, expected {}",
                    roots.len(),
                    br.degree
                )));
            }
            for r in 0..br.degree {
                elements.push(SymmetryTransformation {
                    branch: b,
                    root: Some(r),
                    states: None,
                    params: None,
                    values: None,
                    is_identity: false,
                    real: br.real,
                    moves_state: ms.clone(),
                    moves_param: mp.clone(),
                });
            }
            ref_roots.push(roots);
        }
    }
    // Identity first, then explicit elements, then algebraic ones.
    let mut order: Vec<usize> = (0..elements.len()).collect();
    order.sort_by_key(|&i| (!elements[i].is_identity, !elements[i].is_explicit(), i));
    let elements = order.into_iter().map(|i| elements[i].clone()).collect();
    Ok(ElementSet {
        model: model.clone(),
        roles: sys.roles.clone(),
        unknown_names: sys.unknown_names(),
        branches: dec.branches.clone(),
        elements,
        specialization: sys.specialization.clone(),
        reference: reference.to_vec(),
        ref_roots,
    })
}

fn sort_points(pts: &mut [Vec<Complex64>]) {
    pts.sort_by(|a, b| {
        for (x, y) in a.iter().zip(b) {
            for (p, q) in [(x.re, y.re), (x.im, y.im)] {
                if (p - q).abs() > 1e-9 * (1.0 + p.abs()) {
                    return p.partial_cmp(&q).unwrap_or(std::cmp::Ordering::Equal);
                }
            }
        }
        std::cmp::Ordering::Equal
    });
}

/// Numeric action of an element: `(x̃, θ̃)` at a complex point.
pub type Action = (Vec<Complex64>, Vec<Complex64>);

const CONTINUATION_STEPS: usize = 200;

impl ElementSet {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn identity(&self) -> Option<usize> {
        self.elements.iter().position(|e| e.is_identity)
    }

    pub fn explicit_indices(&self) -> Vec<usize> {
        (0..self.elements.len()).filter(|&i| self.elements[i].is_explicit()).collect()
    }

    pub fn printed(&self, e: &SymmetryTransformation) -> Option<PrintedMaps> {
        let names = self.model.registry().names();
        let (s, p) = (e.states.as_ref()?, e.params.as_ref()?);
        Some(PrintedMaps {
            states: self.model.states.iter().cloned().zip(s.iter().map(|r| r.fmt_with_names(names))).collect(),
            params: self.model.params.iter().cloned().zip(p.iter().map(|r| r.fmt_with_names(names))).collect(),
        })
    }

    /// Lex basis of an algebraic element's branch, printed.
    pub fn constraints(&self, e: &SymmetryTransformation) -> Vec<String> {
        let lex: &GroebnerBasis = &self.branches[e.branch].lex;
        lex.gens.iter().map(|g| lex.ring.fmt(g, &self.model.params, &self.unknown_names)).collect()
    }

    /// Unknown values of element `i` at a complex parameter point; algebraic
    /// roots are followed from the reference point along a path bent into the
    /// complex plane.
    pub fn values_at(&self, i: usize, theta: &[Complex64]) -> Option<Vec<Complex64>> {
        let e = &self.elements[i];
        if let Some(v) = &e.values {
            return v
                .iter()
                .map(|r| {
                    let d = r.den().eval_complex(theta);
                    (d.norm() > 1e-300).then(|| r.num().eval_complex(theta) / d)
                })
                .collect();
        }
        let root = e.root?;
        let lex = &self.branches[e.branch].lex;
        let mut cur = self.ref_roots[e.branch][root].clone();
        let start: Vec<Complex64> = self.reference.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        if start.iter().zip(theta).all(|(a, b)| (a - b).norm() < 1e-14) {
            return Some(cur);
        }
        for s in 1..=CONTINUATION_STEPS {
            let s = s as f64 / CONTINUATION_STEPS as f64;
            let bump = Complex64::new(0.0, 0.37 * s * (1.0 - s));
            let pt: Vec<Complex64> = start
                .iter()
                .zip(theta)
                .enumerate()
                .map(|(j, (a, b))| a + (b - a) * s + bump * (1.0 + 0.13 * j as f64) * (1.0 + a.norm()))
                .collect();
            let cands = branch_points_c(lex, &pt);
            let best = cands.into_iter().min_by(|p, q| dist(p, &cur).partial_cmp(&dist(q, &cur)).unwrap())?;
            cur = best;
        }
        Some(cur)
    }

    /// Applies element `i` at `(t, x, θ)`.
    pub fn apply(&self, i: usize, t: Complex64, x: &[Complex64], theta: &[Complex64]) -> Option<Action> {
        let vals = self.values_at(i, theta)?;
        let mut xs = vec![Complex64::new(0.0, 0.0); x.len()];
        let mut ps = vec![Complex64::new(0.0, 0.0); theta.len()];
        for (u, r) in self.roles.iter().enumerate() {
            let mut m = vals[u] * t.powu(r.t_deg as u32);
            for (v, &d) in r.x_exps.iter().enumerate() {
                if d > 0 {
                    m *= x[v].powu(d as u32);
                }
            }
            if r.on_param {
                ps[r.index] += m;
            } else {
                xs[r.index] += m;
            }
        }
        Some((xs, ps))
    }
}

fn dist(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).norm_sqr()).sum()
}

/// Exact composition `a ∘ b` (apply `b` first) of explicit maps.
pub fn compose(model: &ControlModel, a: &SymmetryTransformation, b: &SymmetryTransformation) -> Result<(Vec<RatFunc>, Vec<RatFunc>), SymmetryError> {
    let (Some(sa), Some(pa), Some(sb), Some(pb)) = (&a.states, &a.params, &b.states, &b.params) else {
        return Err(SymmetryError::NotExplicit);
    };
    let nv = model.nvars();
    let mut images: Vec<RatFunc> = (0..nv).map(|v| RatFunc::var(nv, v)).collect();
    for (i, x) in sb.iter().enumerate() {
        images[model.state_var(i)] = x.clone();
    }
    for (j, p) in pb.iter().enumerate() {
        images[model.param_var(j)] = p.clone();
    }
    let s = sa.iter().map(|r| r.compose(&images, nv)).collect::<Result<Vec<_>, _>>()?;
    let p = pa.iter().map(|r| r.compose(&images, nv)).collect::<Result<Vec<_>, _>>()?;
    Ok((s, p))
}

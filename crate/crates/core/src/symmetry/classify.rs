use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algsolve::{groebner, AlgError, GroebnerBasis, Limits, Ring, TermOrder};
use crate::ansatz::AlgebraicSystem;
use crate::cas::MPoly;
use crate::model::ControlModel;

use super::continuous::Generator;
use super::transform::ElementSet;

pub const SGI_QUALIFIER: &str = "w.r.t. symmetries within the ansatz bounds";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Global,
    Sling,
    Unidentifiable,
    Unknown,
}

impl Verdict {
    pub fn state_label(self) -> &'static str {
        match self {
            Verdict::Global => "globally-observable",
            Verdict::Sling => "locally-not-globally",
            Verdict::Unidentifiable => "unobservable",
            Verdict::Unknown => "unknown",
        }
    }

    pub fn param_label(self) -> &'static str {
        match self {
            Verdict::Global => "SGI",
            Verdict::Sling => "SLING",
            Verdict::Unidentifiable => "unidentifiable",
            Verdict::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictEntry {
    #[serde(skip)]
    pub verdict: Verdict,
    #[serde(rename = "verdict")]
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qualifier: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SioReport {
    pub states: BTreeMap<String, VerdictEntry>,
    pub params: BTreeMap<String, VerdictEntry>,
}

impl SioReport {
    pub fn state(&self, name: &str) -> Verdict {
        self.states[name].verdict
    }

    pub fn param(&self, name: &str) -> Verdict {
        self.params[name].verdict
    }
}

/// How a variable behaves on one positive-dimensional component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarStatus {
    Fixed,
    /// Algebraic over the parameters but not identically the identity value.
    MovedFinitely,
    /// Some coefficient of the variable's map varies freely.
    Free,
}

fn permute_to_last(ring: &Ring, u: usize, gens: &[crate::algsolve::APoly]) -> (Ring, Vec<crate::algsolve::APoly>) {
    let n = ring.n;
    let perm = |m: &[u16]| -> Vec<u16> {
        let mut out: Vec<u16> = m.iter().enumerate().filter(|&(v, _)| v != u).map(|(_, &e)| e).collect();
        out.push(m[u]);
        out
    };
    let order = if n > 1 { TermOrder::Block { sizes: vec![n - 1, 1] } } else { TermOrder::Degrevlex };
    let r2 = Ring::new(n, ring.k, order);
    let gens = gens
        .iter()
        .map(|g| r2.resort(&crate::algsolve::APoly { terms: g.terms.iter().map(|(m, c)| (perm(m), c.clone())).collect() }))
        .collect();
    (r2, gens)
}

/// `I ∩ ℚ(θ)[u] ≠ 0`, by an elimination order with `u` last.
fn has_eliminant(comp: &GroebnerBasis, u: usize, limits: &Limits) -> Result<bool, AlgError> {
    let (r2, gens) = permute_to_last(&comp.ring, u, &comp.gens);
    let gb = groebner(&r2, &gens, limits)?;
    let n = r2.n;
    Ok(gb.gens.iter().any(|g| g.lm()[..n - 1].iter().all(|&e| e == 0)))
}

/// Per-variable status (states then parameters) on each positive-dimensional component.
pub fn positive_status(sys: &AlgebraicSystem, components: &[GroebnerBasis], limits: &Limits) -> Result<Vec<Vec<VarStatus>>, AlgError> {
    let mut id = sys.identity_point();
    if let Some(pt) = &sys.specialization {
        let vals: Vec<(usize, crate::cas::Rational)> = pt.iter().cloned().enumerate().collect();
        id = id.iter().map(|p| p.partial_eval(&vals)).collect();
    }
    let mut out = Vec::new();
    for comp in components {
        let mut row = Vec::new();
        let mut elim_cache: BTreeMap<usize, bool> = BTreeMap::new();
        for (on_param, count) in [(false, sys.n), (true, sys.k)] {
            for idx in 0..count {
                let us = sys.unknowns_of(on_param, idx);
                let fixed = us.iter().all(|&u| {
                    let d = MPoly::var(sys.nvars(), sys.unknown_var(u)).sub(&id[u]);
                    comp.contains(&comp.ring.from_mpoly(&d))
                });
                let status = if fixed {
                    VarStatus::Fixed
                } else {
                    let mut finite = true;
                    for &u in &us {
                        let e = match elim_cache.get(&u) {
                            Some(&e) => e,
                            None => {
                                let e = has_eliminant(comp, u, limits)?;
                                elim_cache.insert(u, e);
                                e
                            }
                        };
                        if !e {
                            finite = false;
                            break;
                        }
                    }
                    if finite {
                        VarStatus::MovedFinitely
                    } else {
                        VarStatus::Free
                    }
                };
                row.push(status);
            }
        }
        out.push(row);
    }
    Ok(out)
}

/// Everything classification looks at.
pub struct ClassifyInput<'a> {
    pub model: &'a ControlModel,
    pub fixed_params: &'a BTreeSet<String>,
    pub elements: Option<&'a ElementSet>,
    /// Elements taking part (all of them unless filtered).
    pub active: Option<&'a [bool]>,
    pub positive: &'a [Vec<VarStatus>],
    pub generators: &'a [Generator],
    /// The finite analysis did not finish.
    pub finite_inconclusive: bool,
}

fn entry(v: Verdict, is_state: bool, witness: Option<String>, note: Option<String>) -> VerdictEntry {
    VerdictEntry {
        verdict: v,
        label: if is_state { v.state_label() } else { v.param_label() }.to_string(),
        qualifier: (v == Verdict::Global).then(|| SGI_QUALIFIER.to_string()),
        witness,
        note,
    }
}

/// One verdict per state and parameter.
pub fn classify(inp: &ClassifyInput) -> SioReport {
    let m = inp.model;
    let mut rep = SioReport::default();
    let n = m.n();
    for var in 0..n + m.k() {
        let is_state = var < n;
        let idx = if is_state { var } else { var - n };
        let name = if is_state { &m.states[idx] } else { &m.params[idx] };
        let e = classify_one(inp, is_state, idx, name);
        if is_state {
            rep.states.insert(name.clone(), e);
        } else {
            rep.params.insert(name.clone(), e);
        }
    }
    rep
}

fn classify_one(inp: &ClassifyInput, is_state: bool, idx: usize, name: &str) -> VerdictEntry {
    if !is_state && inp.fixed_params.contains(name) {
        return entry(Verdict::Unknown, false, None, Some("held fixed by assumption".into()));
    }
    let n = inp.model.n();
    let var = if is_state { idx } else { n + idx };
    for (g, gen) in inp.generators.iter().enumerate() {
        let moved = if is_state { gen.moves_state(idx) } else { gen.moves_param(idx) };
        if moved {
            return entry(Verdict::Unidentifiable, is_state, Some(format!("generator {g}")), None);
        }
    }
    for (c, row) in inp.positive.iter().enumerate() {
        if row[var] == VarStatus::Free {
            return entry(Verdict::Unidentifiable, is_state, Some(format!("positive-dimensional component {c}")), None);
        }
    }
    if inp.finite_inconclusive {
        return entry(Verdict::Unknown, is_state, None, Some("finite analysis inconclusive".into()));
    }
    if let Some(set) = inp.elements {
        for (i, e) in set.elements.iter().enumerate() {
            if inp.active.is_some_and(|a| !a[i]) || e.is_identity {
                continue;
            }
            let moved = if is_state { e.moves_state[idx] } else { e.moves_param[idx] };
            if moved {
                return entry(Verdict::Sling, is_state, Some(format!("element {i}")), None);
            }
        }
    }
    for (c, row) in inp.positive.iter().enumerate() {
        if row[var] == VarStatus::MovedFinitely {
            return entry(Verdict::Sling, is_state, Some(format!("positive-dimensional component {c}")), None);
        }
    }
    entry(Verdict::Global, is_state, None, None)
}

/// Open intervals for states and parameters.
pub type Bounds = BTreeMap<String, (f64, f64)>;

pub fn positivity_bounds(model: &ControlModel) -> Bounds {
    model.states.iter().chain(&model.params).map(|n| (n.clone(), (0.0, f64::INFINITY))).collect()
}

/// Outcome of screening elements against bounds.
#[derive(Debug, Clone, Serialize)]
pub struct BoundFilter {
    pub active: Vec<bool>,
    pub discarded: Vec<usize>,
    /// Kept elements that left the bounds at some sampled points.
    pub partially_violating: Vec<usize>,
}

fn draw(rng: &mut ChaCha8Rng, b: Option<&(f64, f64)>) -> f64 {
    match b {
        Some(&(lo, hi)) if hi.is_finite() && lo.is_finite() => lo + (hi - lo) * rng.gen_range(0.05..0.95),
        Some(&(lo, _)) if lo.is_finite() => lo + rng.gen_range(0.3..2.7),
        Some(&(_, hi)) if hi.is_finite() => hi - rng.gen_range(0.3..2.7),
        _ => rng.gen_range(0.3..2.7),
    }
}

fn admissible(v: Complex64, b: Option<&(f64, f64)>) -> bool {
    if v.im.abs() > 1e-9 * (1.0 + v.re.abs()) {
        return false;
    }
    match b {
        Some(&(lo, hi)) => v.re > lo && v.re < hi,
        None => true,
    }
}

/// Discards elements that are non-real or leave the bounds at every sampled
/// point inside the bounds.
pub fn filter_by_bounds(set: &ElementSet, bounds: &Bounds, seed: u64, samples: usize) -> BoundFilter {
    let m = &set.model;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb0);
    let pts: Vec<(Vec<Complex64>, Vec<Complex64>)> = (0..samples)
        .map(|_| {
            let x = m.states.iter().map(|s| Complex64::new(draw(&mut rng, bounds.get(s)), 0.0)).collect();
            let th = match &set.specialization {
                Some(pt) => pt.iter().map(|r| Complex64::new(r.to_f64(), 0.0)).collect(),
                None => m.params.iter().map(|p| Complex64::new(draw(&mut rng, bounds.get(p)), 0.0)).collect(),
            };
            (x, th)
        })
        .collect();
    let mut f = BoundFilter { active: vec![true; set.order()], discarded: Vec::new(), partially_violating: Vec::new() };
    for (i, e) in set.elements.iter().enumerate() {
        if e.is_identity {
            continue;
        }
        let mut bad = 0;
        for (x, th) in &pts {
            let ok = match set.apply(i, Complex64::new(1.0, 0.0), x, th) {
                None => false,
                Some((xs, ps)) => {
                    xs.iter().zip(&m.states).all(|(v, n)| admissible(*v, bounds.get(n)))
                        && ps.iter().zip(&m.params).all(|(v, n)| admissible(*v, bounds.get(n)))
                }
            };
            if !ok {
                bad += 1;
            }
        }
        if bad == pts.len() {
            f.active[i] = false;
            f.discarded.push(i);
        } else if bad > 0 {
            f.partially_violating.push(i);
        }
    }
    f
}

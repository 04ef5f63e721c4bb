//! The full pipeline: determining systems, ansatz, solving, group analysis,
//! classification, and the JSON report.

use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex64;
use serde_json::{json, Value};
use thiserror::Error;

use crate::algsolve::{solve_system, specialize_random, AlgError, Dimension, Limits, SolveOutcome};
use crate::ansatz::{instantiate_finite, instantiate_infinitesimal, AlgebraicSystem, AnsatzError, LinearCoefficientSystem};
use crate::cas::{RatFunc, Rational};
use crate::detsys::{build_finite_detsys, build_inf_detsys, DetsysError};
use crate::model::{reduce_model, AnalysisOptions, ControlModel, ModelError};
use crate::symmetry::{
    ansatz_maps, classify, extract_transformations, filter_by_bounds, generators, group_structure, positive_status,
    BoundFilter, Bounds, ClassifyInput, ElementSet, Generator, SioReport, SymmetryError, SymmetryGroup, VarStatus,
};
use crate::verify::{
    numeric_invariance, numeric_invariance_explicit, random_scenarios, residual_modulo, residual_passes,
    symbolic_residual_at, VerificationResult, VerifyError,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Detsys(#[from] DetsysError),
    #[error(transparent)]
    Ansatz(#[from] AnsatzError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
    #[error(transparent)]
    Alg(#[from] AlgError),
}

#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub opts: AnalysisOptions,
    pub limits: Limits,
    pub seed: u64,
    pub bounds: Option<Bounds>,
    pub infinitesimal: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig { opts: AnalysisOptions::default(), limits: Limits::default(), seed: 0, bounds: None, infinitesimal: true }
    }
}

/// The biologically relevant sub-report.
#[derive(Debug, Clone)]
pub struct BioReport {
    pub bounds: Bounds,
    pub filter: BoundFilter,
    pub verdicts: SioReport,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    /// The model after state removal.
    pub model: ControlModel,
    pub config: AnalysisConfig,
    pub system: AlgebraicSystem,
    pub outcome: Option<SolveOutcome>,
    /// Set when the finite solver hit a resource ceiling.
    pub finite_inconclusive: Option<String>,
    pub elements: Option<ElementSet>,
    pub group: Option<SymmetryGroup>,
    pub positive: Vec<Vec<VarStatus>>,
    pub linear: Option<LinearCoefficientSystem>,
    pub generators: Vec<Generator>,
    pub verdicts: SioReport,
    pub biological: Option<BioReport>,
    pub caveats: Vec<String>,
    pub millis: BTreeMap<&'static str, u128>,
}

impl Analysis {
    /// Zero-dimensional count, when the finite analysis finished with one.
    pub fn count(&self) -> Option<usize> {
        match self.outcome.as_ref()?.dimension {
            Dimension::Zero { count } => Some(count),
            _ => None,
        }
    }

    pub fn is_inconclusive(&self) -> bool {
        self.finite_inconclusive.is_some()
    }
}

/// Runs every stage. Resource-ceiling failures of the finite solver are
/// recorded, not raised.
pub fn analyze(model: &ControlModel, cfg: &AnalysisConfig) -> Result<Analysis, AnalysisError> {
    let opts = &cfg.opts;
    let model = reduce_model(model, opts)?;
    let mut millis = BTreeMap::new();
    let mut caveats = vec![format!(
        "ansatz degrees deg_x={}, deg_t={}, deg_xi={}: symmetries outside these bounds are not searched",
        opts.deg_x, opts.deg_t, opts.deg_xi
    )];
    if opts.theta_independent_of_x {
        caveats.push("transformed parameters are assumed independent of the states".into());
    }
    for p in &opts.fixed_params {
        caveats.push(format!("parameter {p} is held fixed by assumption; no statement is made about it"));
    }

    let clock = Instant::now();
    let dsys = build_finite_detsys(&model, opts)?;
    let mut system = instantiate_finite(&dsys, opts)?;
    if let Some(seed) = opts.specialize_seed {
        system = specialize_random(&system, seed)?;
        caveats.push(format!(
            "parameters specialized to random rationals (seed {seed}); counts hold with high probability"
        ));
    }
    let mut finite_inconclusive = None;
    let outcome = match solve_system(&system, cfg.seed, &cfg.limits) {
        Ok(o) => Some(o),
        Err(AlgError::Inconclusive(msg)) => {
            caveats.push(format!("finite analysis inconclusive: {msg}"));
            finite_inconclusive = Some(msg);
            None
        }
        Err(e) => return Err(e.into()),
    };
    millis.insert("finite", clock.elapsed().as_millis());

    let mut elements = None;
    let mut group = None;
    let mut positive = Vec::new();
    if let Some(out) = &outcome {
        if !out.decomposition.branches.is_empty() {
            let set = extract_transformations(&model, &system, &out.decomposition, &out.samples[0])?;
            let g = group_structure(&set, &out.samples)?;
            caveats.extend(g.warnings.iter().cloned());
            group = Some(g);
            elements = Some(set);
        }
        if !out.decomposition.positive.is_empty() {
            if let Dimension::Positive { dim, .. } = &out.dimension {
                caveats.push(format!("finite solution set is positive-dimensional (dimension {dim})"));
            }
            match positive_status(&system, &out.decomposition.positive, &cfg.limits) {
                Ok(p) => positive = p,
                Err(AlgError::Inconclusive(msg)) => {
                    caveats.push(format!("positive-dimensional components not analyzed: {msg}"));
                    finite_inconclusive = Some(msg);
                }
                Err(e) => return Err(e.into()),
            }
        }
    }

    let clock = Instant::now();
    let (linear, gens) = if cfg.infinitesimal {
        let lin = instantiate_infinitesimal(&build_inf_detsys(&model, opts)?, opts)?;
        let g = generators(&model, &lin);
        (Some(lin), g)
    } else {
        caveats.push("infinitesimal analysis skipped".into());
        (None, Vec::new())
    };
    millis.insert("infinitesimal", clock.elapsed().as_millis());

    let input = ClassifyInput {
        model: &model,
        fixed_params: &opts.fixed_params,
        elements: elements.as_ref(),
        active: None,
        positive: &positive,
        generators: &gens,
        finite_inconclusive: finite_inconclusive.is_some(),
    };
    let verdicts = classify(&input);
    let biological = match (&cfg.bounds, &elements) {
        (Some(b), Some(set)) => {
            let filter = filter_by_bounds(set, b, cfg.seed, 8);
            for &i in &filter.partially_violating {
                caveats.push(format!("element {i} leaves the bounds at some sampled points but is kept"));
            }
            let verdicts = classify(&ClassifyInput { active: Some(&filter.active), ..input });
            Some(BioReport { bounds: b.clone(), filter, verdicts })
        }
        (Some(b), None) => Some(BioReport {
            bounds: b.clone(),
            filter: BoundFilter { active: Vec::new(), discarded: Vec::new(), partially_violating: Vec::new() },
            verdicts: verdicts.clone(),
        }),
        _ => None,
    };
    Ok(Analysis {
        model,
        config: cfg.clone(),
        system,
        outcome,
        finite_inconclusive,
        elements,
        group,
        positive,
        linear,
        generators: gens,
        verdicts,
        biological,
        caveats,
        millis,
    })
}

fn verdict_json(r: &SioReport) -> Value {
    json!({ "states": r.states, "params": r.params })
}

fn dimension_json(d: &Dimension) -> Value {
    serde_json::to_value(d).expect("dimension serializes")
}

/// The report as JSON. `timestamp` adds run time and wall-clock fields.
pub fn report_json(a: &Analysis, timestamp: Option<String>) -> Value {
    let opts = &a.config.opts;
    let mut options = serde_json::to_value(opts).expect("options serialize");
    options["seed"] = json!(a.config.seed);
    if let Some(pt) = &a.system.specialization {
        options["specialization"] =
            json!(a.model.params.iter().zip(pt).map(|(n, v)| (n.clone(), v.to_string())).collect::<BTreeMap<_, _>>());
    }
    let continuous = json!({
        "dimension": a.linear.as_ref().map(|_| a.generators.len()),
        "generators": a.generators.iter().map(|g| json!({
            "xi": g.xi.iter().cloned().collect::<BTreeMap<_, _>>(),
            "zeta": g.zeta.iter().cloned().collect::<BTreeMap<_, _>>(),
        })).collect::<Vec<_>>(),
    });
    let mut discrete = json!({
        "order": a.count(),
        "status": if a.is_inconclusive() { "inconclusive" } else { "complete" },
        "probabilistic": a.system.probabilistic,
    });
    if let Some(out) = &a.outcome {
        discrete["dimension"] = dimension_json(&out.dimension);
        discrete["branches"] = json!(out
            .decomposition
            .branches
            .iter()
            .map(|b| json!({"degree": b.degree, "certified": b.certified, "real": b.real}))
            .collect::<Vec<_>>());
    }
    if let Some(set) = &a.elements {
        let orders = a.group.as_ref().map(|g| g.element_orders.clone()).unwrap_or_default();
        let elems: Vec<Value> = set
            .elements
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let mut v = json!({
                    "id": i,
                    "branch": e.branch,
                    "identity": e.is_identity,
                    "explicit": e.is_explicit(),
                    "real": e.real,
                    "order": orders.get(i).copied().flatten(),
                });
                if let Some(p) = set.printed(e) {
                    v["states"] = json!(p.states.into_iter().collect::<BTreeMap<_, _>>());
                    v["params"] = json!(p.params.into_iter().collect::<BTreeMap<_, _>>());
                } else {
                    v["root"] = json!(e.root);
                    v["constraints"] = json!(set.constraints(e));
                }
                v
            })
            .collect();
        discrete["elements"] = json!(elems);
    } else {
        discrete["elements"] = json!([]);
    }
    if let Some(g) = &a.group {
        if !g.exact_table.is_empty() {
            discrete["table"] = json!({"elements": g.explicit, "rows": g.exact_table});
        }
        if let Some(t) = &g.table {
            discrete["full_table"] = json!(t);
        }
        discrete["abelian"] = json!(g.abelian);
        if let Some(n) = &g.name {
            discrete["group_name"] = json!(n);
        }
    }
    let mut report = json!({
        "model": a.model.name,
        "options": options,
        "continuous": continuous,
        "discrete": discrete,
        "verdicts": verdict_json(&a.verdicts),
        "caveats": a.caveats,
    });
    if let Some(b) = &a.biological {
        report["biological"] = json!({
            "bounds": b.bounds.iter().map(|(k, (lo, hi))| (k.clone(), json!([finite_or_null(*lo), finite_or_null(*hi)]))).collect::<BTreeMap<_, _>>(),
            "discarded": b.filter.discarded,
            "partially_violating": b.filter.partially_violating,
            "verdicts": verdict_json(&b.verdicts),
        });
    }
    if let Some(ts) = timestamp {
        report["timestamp"] = json!(ts);
        report["timing_ms"] = json!(a.millis);
    }
    report
}

fn finite_or_null(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

/// Verification of one element.
#[derive(Debug, Clone)]
pub struct ElementCheck {
    pub element: usize,
    pub symbolic: bool,
    pub numeric: Vec<VerificationResult>,
}

impl ElementCheck {
    pub fn passes(&self) -> bool {
        self.symbolic && self.numeric.iter().all(|r| r.pass)
    }
}

/// Symbolic and numeric checks of every element on `scenarios` seeded
/// scenarios. With `perturb`, one output-relevant state map is shifted by
/// `1/100` first, as a negative control.
pub fn check_elements(a: &Analysis, seed: u64, scenarios: usize, tol: f64, perturb: bool) -> Result<Vec<ElementCheck>, VerifyError> {
    let Some(set) = &a.elements else { return Ok(Vec::new()) };
    let model = &a.model;
    let spec = a.system.specialization.as_deref();
    let theta_fixed: Option<Vec<f64>> = a.system.specialization.as_ref().map(|p| p.iter().map(Rational::to_f64).collect());
    let scs = random_scenarios(model, seed, scenarios, theta_fixed.as_deref());
    let target = perturb_target(model);
    let shift = Rational::new(1, 100);
    let mut out = Vec::new();
    for (i, e) in set.elements.iter().enumerate() {
        let mut numeric = Vec::new();
        let symbolic;
        if let (Some(s), Some(p)) = (&e.states, &e.params) {
            let mut s = s.clone();
            if perturb {
                s[target] = s[target].add(&RatFunc::constant(model.nvars(), shift.clone()));
            }
            symbolic = residual_passes(&symbolic_residual_at(model, &s, p, spec)?);
            for sc in &scs {
                numeric.push(numeric_invariance_explicit(model, &s, p, sc, tol)?);
            }
        } else {
            let (sa, pa) = ansatz_maps(&a.model, &set.roles);
            symbolic = !perturb && residual_modulo(model, spec, &sa, &pa, &set.branches[e.branch].lex)?;
            for sc in &scs {
                let th: Vec<Complex64> = sc.theta.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                let x: Vec<Complex64> = sc.x0.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                let (mut xt, pt) = set
                    .apply(i, Complex64::new(sc.t0, 0.0), &x, &th)
                    .ok_or_else(|| VerifyError::Scenario(format!("element {i} could not be evaluated")))?;
                if perturb {
                    xt[target] += 0.01;
                }
                numeric.push(numeric_invariance(model, sc, &xt, &pt, tol)?);
            }
        }
        out.push(ElementCheck { element: i, symbolic, numeric });
    }
    Ok(out)
}

/// First state occurring in an output.
fn perturb_target(model: &ControlModel) -> usize {
    (0..model.n())
        .find(|&i| model.outputs.iter().any(|(_, h)| h.contains_var(model.state_var(i))))
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;
    use crate::symmetry::Verdict;

    fn load(name: &str) -> ControlModel {
        let path = format!("{}/../../models/{name}.sfm", env!("CARGO_MANIFEST_DIR"));
        parse_model(&std::fs::read_to_string(path).unwrap()).unwrap()
    }

    #[test]
    fn llw_verdicts() {
        let mut cfg = AnalysisConfig::default();
        cfg.opts.deg_xi = 1;
        let a = analyze(&load("llw1987"), &cfg).unwrap();
        assert!(a.count().is_none());
        assert!(!a.generators.is_empty());
        for p in ["th1", "th3"] {
            assert_eq!(a.verdicts.param(p), Verdict::Sling, "{p}");
        }
        for p in ["th2", "th4"] {
            assert_eq!(a.verdicts.param(p), Verdict::Unidentifiable, "{p}");
        }
        for s in ["x1", "x2"] {
            assert_eq!(a.verdicts.state(s), Verdict::Unidentifiable, "{s}");
        }
    }

    #[test]
    fn goodwin_checks_and_negative_controls() {
        let a = analyze(&load("goodwin"), &AnalysisConfig::default()).unwrap();
        let good = check_elements(&a, 1, 1, 1e-8, false).unwrap();
        assert_eq!(good.len(), 8);
        assert!(good.iter().all(|c| c.passes()), "{good:?}");
        let bad = check_elements(&a, 1, 1, 1e-8, true).unwrap();
        assert!(bad.iter().all(|c| c.numeric.iter().all(|r| !r.pass)));
    }

    #[test]
    fn report_is_deterministic() {
        let m = load("toy_sign");
        let cfg = AnalysisConfig::default();
        let a = report_json(&analyze(&m, &cfg).unwrap(), None);
        let b = report_json(&analyze(&m, &cfg).unwrap(), None);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a["discrete"]["order"], 2);
        assert_eq!(a["verdicts"]["states"]["x"]["verdict"], "locally-not-globally");
    }
}

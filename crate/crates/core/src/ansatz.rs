//! Bounded-degree polynomial ansatz turning determining systems into
//! finite algebraic (finite case) or linear (infinitesimal case) systems.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::cas::{MPoly, Rational, VarKind, VarRegistry};
use crate::detsys::{monomials_up_to, ConditionGroup, DetKind, DeterminingSystem, JetBase, JetDeriv};
use crate::model::AnalysisOptions;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnsatzError {
    #[error("deg_x = 0 forces constant state maps, but the outputs depend on the states")]
    ConstantStateMaps,
    #[error("expected a {0:?} determining system")]
    WrongKind(DetKind),
}

/// What an ansatz unknown is the coefficient of.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnknownRole {
    /// `true` for a transformed-parameter coefficient, `false` for a state map.
    pub on_param: bool,
    /// State or parameter index.
    pub index: usize,
    /// Exponents of the states in the multiplied monomial.
    pub x_exps: Vec<u16>,
    pub t_deg: u16,
}

/// Polynomial system in the ansatz unknowns with coefficients in `ℚ[θ]`.
///
/// Polynomials live over `[θ_1..θ_k, unknowns..]`; the θ block is the
/// coefficient field, the rest are solved for.
#[derive(Debug, Clone)]
pub struct AlgebraicSystem {
    pub registry: VarRegistry,
    pub k: usize,
    pub n: usize,
    pub state_names: Vec<String>,
    pub roles: Vec<UnknownRole>,
    pub equations: Vec<MPoly>,
    /// Each must be nonzero on an admissible solution.
    pub nondegeneracy: Vec<MPoly>,
    /// θ-only polynomials that must not vanish at a specialization point.
    pub theta_denominators: Vec<MPoly>,
    pub probabilistic: bool,
    /// Values substituted for θ by a random specialization; θ stays in the
    /// registry but no longer occurs in the equations.
    pub specialization: Option<Vec<Rational>>,
}

impl AlgebraicSystem {
    pub fn nvars(&self) -> usize {
        self.registry.len()
    }

    pub fn num_unknowns(&self) -> usize {
        self.roles.len()
    }

    pub fn unknown_var(&self, u: usize) -> usize {
        self.k + u
    }

    pub fn unknown_names(&self) -> Vec<String> {
        self.registry.names()[self.k..].to_vec()
    }

    /// Values of the unknowns at the identity transformation, over the registry.
    pub fn identity_point(&self) -> Vec<MPoly> {
        let nv = self.nvars();
        self.roles
            .iter()
            .map(|r| {
                let deg: u16 = r.x_exps.iter().sum::<u16>() + r.t_deg;
                if r.on_param {
                    if deg == 0 {
                        MPoly::var(nv, r.index)
                    } else {
                        MPoly::zero(nv)
                    }
                } else if r.t_deg == 0 && deg == 1 && r.x_exps[r.index] == 1 {
                    MPoly::one(nv)
                } else {
                    MPoly::zero(nv)
                }
            })
            .collect()
    }

    /// Unknowns attached to a given state or parameter.
    pub fn unknowns_of(&self, on_param: bool, index: usize) -> Vec<usize> {
        (0..self.roles.len())
            .filter(|&u| self.roles[u].on_param == on_param && self.roles[u].index == index)
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let names = self.registry.names().to_vec();
        serde_json::json!({
            "parameters": names[..self.k],
            "unknowns": names[self.k..],
            "equations": self.equations.iter().map(|p| p.fmt_with_names(&names)).collect::<Vec<_>>(),
            "nondegeneracy": self.nondegeneracy.iter().map(|p| p.fmt_with_names(&names)).collect::<Vec<_>>(),
            "probabilistic": self.probabilistic,
            "specialization": self.specialization.as_ref().map(|v| {
                names[..self.k].iter().zip(v).map(|(n, r)| (n.clone(), r.to_string())).collect::<BTreeMap<_, _>>()
            }),
        })
    }
}

/// Homogeneous linear system over ℚ for the coefficients of a polynomial
/// generator ansatz in `(x, θ)`.
#[derive(Debug, Clone)]
pub struct LinearCoefficientSystem {
    pub columns: Vec<String>,
    pub roles: Vec<UnknownRole>,
    /// Exponents over `[x, θ]` for each column (the `x_exps` of the role cover only x).
    pub theta_exps: Vec<Vec<u16>>,
    pub rows: Vec<Vec<(usize, Rational)>>,
    pub n: usize,
    pub k: usize,
}

fn mono_label(names: &[String], exps: &[u16]) -> String {
    let parts: Vec<String> = exps
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0)
        .map(|(i, &e)| if e == 1 { names[i].clone() } else { format!("{}^{e}", names[i]) })
        .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

/// Deterministic generic point used to sample x-dependent constraints.
fn generic_value(i: usize) -> Rational {
    Rational::new(2 * i as i64 + 7, i as i64 + 3)
}

fn x_monomials(n: usize, deg_x: u32, deg_t: u32) -> Vec<(Vec<u16>, u16)> {
    let mut out = Vec::new();
    for td in 0..=deg_t as u16 {
        for e in monomials_up_to(n, deg_x) {
            out.push((e, td));
        }
    }
    out
}

fn determinant(m: &[Vec<MPoly>], nv: usize) -> MPoly {
    let n = m.len();
    if n == 0 {
        return MPoly::one(nv);
    }
    if n == 1 {
        return m[0][0].clone();
    }
    let mut acc = MPoly::zero(nv);
    for c in 0..n {
        if m[0][c].is_zero() {
            continue;
        }
        let minor: Vec<Vec<MPoly>> = m[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|(j, _)| *j != c).map(|(_, p)| p.clone()).collect())
            .collect();
        let term = m[0][c].mul(&determinant(&minor, nv));
        acc = if c % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
    }
    acc
}

pub fn instantiate_finite(dsys: &DeterminingSystem, opts: &AnalysisOptions) -> Result<AlgebraicSystem, AnsatzError> {
    if dsys.kind != DetKind::Finite {
        return Err(AnsatzError::WrongKind(DetKind::Finite));
    }
    let (n, k) = (dsys.n, dsys.k);
    let x_vars: Vec<usize> = (1..=n).collect();
    if opts.deg_x == 0 {
        let outputs_see_states = dsys
            .equations
            .iter()
            .filter(|e| e.group == ConditionGroup::Output)
            .any(|e| x_vars.iter().any(|&v| e.poly.contains_var(v)));
        if outputs_see_states {
            return Err(AnsatzError::ConstantStateMaps);
        }
    }
    let names = dsys.registry.names();
    let state_names: Vec<String> = names[1..=n].to_vec();
    let param_names: Vec<String> = names[1 + n..1 + n + k].to_vec();

    // Unknowns and their roles.
    let monos = x_monomials(n, opts.deg_x, opts.deg_t);
    let mut roles = Vec::new();
    let mut unames = Vec::new();
    let label = |e: &[u16], td: u16| {
        let mut l = mono_label(&state_names, e);
        if td > 0 {
            let t = if td == 1 { "t".to_string() } else { format!("t^{td}") };
            l = if l == "1" { t } else { format!("{l}*{t}") };
        }
        l
    };
    for i in 0..n {
        for (e, td) in &monos {
            roles.push(UnknownRole { on_param: false, index: i, x_exps: e.clone(), t_deg: *td });
            unames.push(format!("c_{}[{}]", state_names[i], label(e, *td)));
        }
    }
    for j in 0..k {
        if opts.theta_independent_of_x {
            roles.push(UnknownRole { on_param: true, index: j, x_exps: vec![0; n], t_deg: 0 });
            unames.push(format!("{}~", param_names[j]));
        } else {
            for (e, td) in &monos {
                roles.push(UnknownRole { on_param: true, index: j, x_exps: e.clone(), t_deg: *td });
                let l = label(e, *td);
                unames.push(if l == "1" { format!("{}~", param_names[j]) } else { format!("{}~[{l}]", param_names[j]) });
            }
        }
    }

    // Working registry [t, x, θ, unknowns].
    let base = 1 + n + k;
    let nw = base + roles.len();
    let ansatz_of = |on_param: bool, idx: usize| -> MPoly {
        let mut p = MPoly::zero(nw);
        for (u, r) in roles.iter().enumerate() {
            if r.on_param == on_param && r.index == idx {
                let mut ex = vec![0u16; nw];
                ex[0] = r.t_deg;
                ex[1..=n].copy_from_slice(&r.x_exps);
                ex[base + u] = 1;
                p = p.add(&MPoly::monomial(ex, Rational::one()));
            }
        }
        p
    };
    let mut images: Vec<Option<MPoly>> = (0..base).map(|v| Some(MPoly::var(nw, v))).collect();
    for jet in &dsys.jets {
        let (on_param, idx) = match jet.base {
            JetBase::X(i) => (false, i),
            JetBase::Theta(j) => (true, j),
            _ => unreachable!("finite system has only X and Θ jets"),
        };
        let a = ansatz_of(on_param, idx);
        let img = match jet.deriv {
            JetDeriv::None => a,
            JetDeriv::T => a.diff(0),
            JetDeriv::X(m) => a.diff(1 + m),
        };
        images.push(Some(img));
    }

    let to_alg = |p: &MPoly| -> MPoly {
        let mut mapping = vec![0usize; nw];
        for v in 0..k {
            mapping[1 + n + v] = v;
        }
        for u in 0..roles.len() {
            mapping[base + u] = k + u;
        }
        p.remap(k + roles.len(), &mapping)
    };
    let tx: Vec<usize> = (0..=n).collect();

    let mut seen = HashSet::new();
    let mut equations = Vec::new();
    for e in &dsys.equations {
        let sub = e.poly.compose(&images, nw);
        for (_, coeff) in sub.coefficients_in(&tx) {
            let q = to_alg(&coeff).primitive_integer();
            if q.is_zero() {
                continue;
            }
            if seen.insert(q.clone()) {
                equations.push(q);
            }
        }
    }

    let sample = |p: &MPoly| -> MPoly {
        let point: Vec<(usize, Rational)> = (0..=n).map(|v| (v, generic_value(v))).collect();
        p.partial_eval(&point)
    };

    let mut nondeg = Vec::new();
    let mut theta_dens = Vec::new();
    let jac: Vec<Vec<MPoly>> = (0..n)
        .map(|i| (0..n).map(|m| ansatz_of(false, i).diff(1 + m)).collect())
        .collect();
    let det = determinant(&jac, nw);
    nondeg.push(to_alg(&sample(&det)).primitive_integer());
    for d in &dsys.cleared_denominators {
        let sub = sample(&d.compose(&images, nw));
        let q = to_alg(&sub).primitive_integer();
        if q.is_constant() {
            continue;
        }
        if q.vars().iter().all(|&v| v < k) {
            theta_dens.push(q);
        } else if !nondeg.contains(&q) {
            nondeg.push(q);
        }
    }
    // θ-only denominators of the model itself (sampled in x).
    for d in &dsys.cleared_denominators {
        if d.vars().iter().all(|&v| v < base) {
            let q = to_alg(&sample(&d.compose(&images, nw))).primitive_integer();
            if !q.is_constant() && !theta_dens.contains(&q) {
                theta_dens.push(q);
            }
        }
    }

    let mut registry = VarRegistry::new();
    for p in &param_names {
        registry.push(p, VarKind::Parameter).expect("unique");
    }
    for (u, name) in unames.iter().enumerate() {
        let kind = if roles[u].on_param { VarKind::TransformedParameter } else { VarKind::AnsatzCoefficient };
        registry.push(name, kind).expect("unique unknown names");
    }
    Ok(AlgebraicSystem {
        registry,
        k,
        n,
        state_names,
        roles,
        equations,
        nondegeneracy: nondeg,
        theta_denominators: theta_dens,
        probabilistic: false,
        specialization: None,
    })
}

pub fn instantiate_infinitesimal(
    dsys: &DeterminingSystem,
    opts: &AnalysisOptions,
) -> Result<LinearCoefficientSystem, AnsatzError> {
    if dsys.kind != DetKind::Infinitesimal {
        return Err(AnsatzError::WrongKind(DetKind::Infinitesimal));
    }
    let (n, k) = (dsys.n, dsys.k);
    let names = dsys.registry.names();
    let xt_names: Vec<String> = names[1..1 + n + k].to_vec();
    let mut roles = Vec::new();
    let mut theta_exps = Vec::new();
    let mut columns = Vec::new();
    let all = monomials_up_to(n + k, opts.deg_xi);
    for i in 0..n {
        for e in &all {
            roles.push(UnknownRole { on_param: false, index: i, x_exps: e[..n].to_vec(), t_deg: 0 });
            theta_exps.push(e[n..].to_vec());
            columns.push(format!("xi_{}[{}]", names[1 + i], mono_label(&xt_names, e)));
        }
    }
    for j in 0..k {
        for e in &all {
            if opts.theta_independent_of_x && e[..n].iter().any(|&d| d > 0) {
                continue;
            }
            roles.push(UnknownRole { on_param: true, index: j, x_exps: e[..n].to_vec(), t_deg: 0 });
            theta_exps.push(e[n..].to_vec());
            columns.push(format!("zeta_{}[{}]", names[1 + n + j], mono_label(&xt_names, e)));
        }
    }
    let base = 1 + n + k;
    let nw = base + roles.len();
    let ansatz_of = |on_param: bool, idx: usize| -> MPoly {
        let mut p = MPoly::zero(nw);
        for (u, r) in roles.iter().enumerate() {
            if r.on_param == on_param && r.index == idx {
                let mut ex = vec![0u16; nw];
                ex[1..=n].copy_from_slice(&r.x_exps);
                ex[1 + n..base].copy_from_slice(&theta_exps[u]);
                ex[base + u] = 1;
                p = p.add(&MPoly::monomial(ex, Rational::one()));
            }
        }
        p
    };
    let mut images: Vec<Option<MPoly>> = (0..base).map(|v| Some(MPoly::var(nw, v))).collect();
    for jet in &dsys.jets {
        let (on_param, idx) = match jet.base {
            JetBase::Xi(i) => (false, i),
            JetBase::Zeta(j) => (true, j),
            _ => unreachable!("infinitesimal system has only ξ and ζ jets"),
        };
        let a = ansatz_of(on_param, idx);
        images.push(Some(match jet.deriv {
            JetDeriv::None => a,
            JetDeriv::T => a.diff(0),
            JetDeriv::X(m) => a.diff(1 + m),
        }));
    }
    let txth: Vec<usize> = (0..base).collect();
    let mut rows = Vec::new();
    let mut seen = BTreeSet::new();
    for e in &dsys.equations {
        let sub = e.poly.compose(&images, nw);
        for (_, coeff) in sub.coefficients_in(&txth) {
            let mut row: BTreeMap<usize, Rational> = BTreeMap::new();
            for (ex, c) in coeff.terms() {
                let col = ex[base..].iter().position(|&d| d == 1).expect("linear in ansatz coefficients");
                *row.entry(col).or_insert_with(Rational::zero) += c;
            }
            let row: Vec<(usize, Rational)> = row.into_iter().filter(|(_, c)| !c.is_zero()).collect();
            if !row.is_empty() && seen.insert(format!("{row:?}")) {
                rows.push(row);
            }
        }
    }
    Ok(LinearCoefficientSystem { columns, roles, theta_exps, rows, n, k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detsys::{build_finite_detsys, build_inf_detsys};
    use crate::model::{parse_model, ControlModel};

    fn load(name: &str) -> ControlModel {
        let path = format!("{}/../../models/{name}.sfm", env!("CARGO_MANIFEST_DIR"));
        parse_model(&std::fs::read_to_string(path).unwrap()).unwrap()
    }

    fn eval_at_identity(sys: &AlgebraicSystem, p: &MPoly) -> MPoly {
        let nv = sys.nvars();
        let mut images: Vec<Option<MPoly>> = (0..sys.k).map(|v| Some(MPoly::var(nv, v))).collect();
        images.extend(sys.identity_point().into_iter().map(Some));
        p.compose(&images, nv)
    }

    #[test]
    fn identity_point_solves_and_is_nondegenerate() {
        for name in ["decay", "toy_sign", "goodwin", "mammillary4", "llw1987", "two_pool"] {
            let m = load(name);
            for flag in [true, false] {
                let opts = AnalysisOptions { theta_independent_of_x: flag, ..Default::default() };
                let d = build_finite_detsys(&m, &opts).unwrap();
                let sys = instantiate_finite(&d, &opts).unwrap();
                for e in &sys.equations {
                    assert!(eval_at_identity(&sys, e).is_zero(), "{name}");
                }
                for g in &sys.nondegeneracy {
                    assert!(!eval_at_identity(&sys, g).is_zero(), "{name}");
                }
            }
        }
    }

    #[test]
    fn no_state_or_time_variables_remain() {
        let m = load("goodwin");
        let opts = AnalysisOptions::default();
        let sys = instantiate_finite(&build_finite_detsys(&m, &opts).unwrap(), &opts).unwrap();
        assert_eq!(sys.k, 3);
        assert_eq!(sys.num_unknowns(), 3 * 4 + 3);
        assert!(sys.equations.iter().all(|e| e.nvars() == sys.nvars()));
        // The transformed denominator 1 + Z~^4 involves unknowns.
        assert!(sys.nondegeneracy.len() >= 2);
    }

    #[test]
    fn zero_degree_rejected() {
        let m = load("goodwin");
        let opts = AnalysisOptions { deg_x: 0, ..Default::default() };
        let d = build_finite_detsys(&m, &opts).unwrap();
        assert_eq!(instantiate_finite(&d, &opts).unwrap_err(), AnsatzError::ConstantStateMaps);
    }

    #[test]
    fn extraction_matches_direct_substitution() {
        // Evaluate each determining equation with the ansatz plugged in at random
        // (t, x, θ, c) and compare with the extracted coefficient equations.
        use rand::{Rng, SeedableRng};
        let m = load("goodwin");
        let opts = AnalysisOptions::default();
        let d = build_finite_detsys(&m, &opts).unwrap();
        let sys = instantiate_finite(&d, &opts).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let r = |rng: &mut rand_chacha::ChaCha8Rng| Rational::new(rng.gen_range(-9..=9), rng.gen_range(1..=5));
            let t = r(&mut rng);
            let x: Vec<Rational> = (0..sys.n).map(|_| r(&mut rng)).collect();
            let th: Vec<Rational> = (0..sys.k).map(|_| r(&mut rng)).collect();
            let c: Vec<Rational> = (0..sys.num_unknowns()).map(|_| r(&mut rng)).collect();
            // Direct: jet values from the ansatz.
            let xval = |on_param: bool, idx: usize, dv: Option<usize>| -> Rational {
                let mut acc = Rational::zero();
                for (u, role) in sys.roles.iter().enumerate() {
                    if role.on_param != on_param || role.index != idx {
                        continue;
                    }
                    let mut ex = role.x_exps.clone();
                    let mut coef = c[u].clone();
                    if let Some(mv) = dv {
                        if ex[mv] == 0 {
                            continue;
                        }
                        coef = coef * Rational::from_int(ex[mv] as i64);
                        ex[mv] -= 1;
                    }
                    let mut term = coef;
                    for (i, &e) in ex.iter().enumerate() {
                        term = term * x[i].pow(e as u32);
                    }
                    acc += &term;
                }
                acc
            };
            let mut point = vec![t.clone()];
            point.extend(x.iter().cloned());
            point.extend(th.iter().cloned());
            for j in &d.jets {
                let v = match (j.base, j.deriv) {
                    (JetBase::X(i), JetDeriv::None) => xval(false, i, None),
                    (JetBase::X(i), JetDeriv::X(m)) => xval(false, i, Some(m)),
                    (JetBase::Theta(i), JetDeriv::None) => xval(true, i, None),
                    _ => Rational::zero(),
                };
                point.push(v);
            }
            let direct_zero = d.equations.iter().all(|e| e.poly.eval(&point).is_zero());
            let mut apoint = th.clone();
            apoint.extend(c.iter().cloned());
            let extracted_zero = sys.equations.iter().all(|e| e.eval(&apoint).is_zero());
            assert_eq!(direct_zero, extracted_zero);
        }
    }

    #[test]
    fn llw_infinitesimal_columns() {
        let m = load("llw1987");
        let opts = AnalysisOptions { deg_xi: 1, ..Default::default() };
        let lin = instantiate_infinitesimal(&build_inf_detsys(&m, &opts).unwrap(), &opts).unwrap();
        // ξ over 1 + 3 + 4 monomials for 3 states, ζ over 1 + 4 for 4 parameters.
        assert_eq!(lin.columns.len(), 3 * 8 + 4 * 5);
        assert!(lin.columns.contains(&"xi_x1[x1]".to_string()));
        assert!(lin.columns.contains(&"zeta_th4[th4]".to_string()));
    }
}

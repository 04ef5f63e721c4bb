use serde::Serialize;

use crate::algsolve::nullspace;
use crate::ansatz::LinearCoefficientSystem;
use crate::cas::{MPoly, Rational};
use crate::model::ControlModel;

/// An infinitesimal generator `Σ ξ_i ∂_{x_i} + Σ ζ_j ∂_{θ_j}`.
#[derive(Debug, Clone, Serialize)]
pub struct Generator {
    /// `(state, ξ_i)` printed over the model names.
    pub xi: Vec<(String, String)>,
    pub zeta: Vec<(String, String)>,
    #[serde(skip)]
    pub xi_polys: Vec<MPoly>,
    #[serde(skip)]
    pub zeta_polys: Vec<MPoly>,
    #[serde(skip)]
    pub vector: Vec<Rational>,
}

impl Generator {
    pub fn moves_state(&self, i: usize) -> bool {
        !self.xi_polys[i].is_zero()
    }

    pub fn moves_param(&self, j: usize) -> bool {
        !self.zeta_polys[j].is_zero()
    }
}

/// Generators from a coefficient vector of the linear system.
pub fn generator_from(model: &ControlModel, lin: &LinearCoefficientSystem, v: &[Rational]) -> Generator {
    let nv = model.nvars();
    let mut xi = vec![MPoly::zero(nv); model.n()];
    let mut zeta = vec![MPoly::zero(nv); model.k()];
    for (col, c) in v.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let r = &lin.roles[col];
        let mut e = vec![0u16; nv];
        for (i, &d) in r.x_exps.iter().enumerate() {
            e[model.state_var(i)] = d;
        }
        for (j, &d) in lin.theta_exps[col].iter().enumerate() {
            e[model.param_var(j)] = d;
        }
        let term = MPoly::monomial(e, c.clone());
        let slot = if r.on_param { &mut zeta[r.index] } else { &mut xi[r.index] };
        *slot = slot.add(&term);
    }
    let names = model.registry().names();
    Generator {
        xi: model.states.iter().cloned().zip(xi.iter().map(|p| p.fmt_with_names(names))).collect(),
        zeta: model.params.iter().cloned().zip(zeta.iter().map(|p| p.fmt_with_names(names))).collect(),
        xi_polys: xi,
        zeta_polys: zeta,
        vector: v.to_vec(),
    }
}

/// A nullspace basis of the linear system, as generators.
pub fn generators(model: &ControlModel, lin: &LinearCoefficientSystem) -> Vec<Generator> {
    nullspace(lin).iter().map(|v| generator_from(model, lin, v)).collect()
}

/// Whether `w` lies in the span of `basis` (all of equal length).
pub fn in_span(basis: &[Vec<Rational>], w: &[Rational]) -> bool {
    // Kernel of [v_1 … v_d w]: w is in the span iff some kernel vector uses w.
    let d = basis.len();
    let rows: Vec<Vec<(usize, Rational)>> = (0..w.len())
        .map(|r| {
            let mut row: Vec<(usize, Rational)> = basis.iter().enumerate().map(|(c, v)| (c, v[r].clone())).collect();
            row.push((d, w[r].clone()));
            row
        })
        .collect();
    crate::algsolve::nullspace_rows(d + 1, &rows).iter().any(|k| !k[d].is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::instantiate_infinitesimal;
    use crate::detsys::build_inf_detsys;
    use crate::model::{parse_model, AnalysisOptions};

    fn model(name: &str) -> ControlModel {
        let path = format!("{}/../../models/{name}.sfm", env!("CARGO_MANIFEST_DIR"));
        parse_model(&std::fs::read_to_string(path).unwrap()).unwrap()
    }

    #[test]
    fn llw_scaling_generator() {
        let m = model("llw1987");
        let opts = AnalysisOptions { deg_xi: 1, ..Default::default() };
        let lin = instantiate_infinitesimal(&build_inf_detsys(&m, &opts).unwrap(), &opts).unwrap();
        let gens = generators(&m, &lin);
        assert!(!gens.is_empty());
        // (ξ; ζ) = (−x1, x2, 0; 0, −th2, 0, th4).
        let mut w = vec![Rational::zero(); lin.columns.len()];
        for (name, v) in [("xi_x1[x1]", -1), ("xi_x2[x2]", 1), ("zeta_th2[th2]", -1), ("zeta_th4[th4]", 1)] {
            let c = lin.columns.iter().position(|c| c == name).unwrap();
            w[c] = Rational::from_int(v);
        }
        let basis: Vec<Vec<Rational>> = gens.iter().map(|g| g.vector.clone()).collect();
        assert!(in_span(&basis, &w));
        for g in &gens {
            assert!(!g.moves_state(2) && !g.moves_param(0) && !g.moves_param(2));
        }
    }

    #[test]
    fn decay_has_no_generator() {
        let m = model("decay");
        let opts = AnalysisOptions::default();
        let lin = instantiate_infinitesimal(&build_inf_detsys(&m, &opts).unwrap(), &opts).unwrap();
        assert!(generators(&m, &lin).is_empty());
    }

    #[test]
    fn span_test() {
        let r = Rational::from_int;
        let basis = vec![vec![r(1), r(0), r(1)]];
        assert!(in_span(&basis, &[r(2), r(0), r(2)]));
        assert!(!in_span(&basis, &[r(1), r(1), r(0)]));
    }
}

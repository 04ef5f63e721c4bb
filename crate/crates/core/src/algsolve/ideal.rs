use serde::Serialize;

use super::apoly::{mono_divides, APoly, Mono, Ring};
use super::groebner::{groebner, GroebnerBasis, Limits};
use super::{AlgError, TermOrder};

/// `J : g^∞` via the Rabinowitsch trick. The result uses the ring's order.
pub fn saturate(gb: &GroebnerBasis, g: &APoly, limits: &Limits) -> Result<GroebnerBasis, AlgError> {
    let ring = &gb.ring;
    if gb.is_unit() {
        return Ok(gb.clone());
    }
    let r = gb.normal_form(g);
    if r.is_zero() {
        // g vanishes on every component.
        return Ok(GroebnerBasis { ring: ring.clone(), gens: vec![ring.one()], reduced: true, stats: gb.stats.clone() });
    }
    if r.is_unit() {
        return Ok(gb.clone());
    }
    let ext = Ring::new(ring.n + 1, ring.k, TermOrder::Block { sizes: vec![1, ring.n] });
    let lift = |p: &APoly| -> APoly {
        ext.resort(&APoly {
            terms: p
                .terms
                .iter()
                .map(|(m, c)| {
                    let mut e = Vec::with_capacity(m.len() + 1);
                    e.push(0);
                    e.extend_from_slice(m);
                    (e, c.clone())
                })
                .collect(),
        })
    };
    let mut input: Vec<APoly> = gb.gens.iter().map(lift).collect();
    input.push(ext.sub(&ext.mul(&ext.var(0), &lift(&r)), &ext.one()));
    let big = groebner(&ext, &input, limits)?;
    let kept: Vec<APoly> = big
        .gens
        .iter()
        .filter(|p| !p.contains_unknown(0))
        .map(|p| APoly { terms: p.terms.iter().map(|(m, c)| (m[1..].to_vec(), c.clone())).collect() })
        .collect();
    let flat = Ring::new(ring.n, ring.k, TermOrder::Degrevlex);
    let mut out = if ring.order == TermOrder::Degrevlex {
        GroebnerBasis {
            ring: flat.clone(),
            gens: super::groebner::interreduce(&flat, kept.iter().map(|p| flat.resort(p)).collect()),
            reduced: true,
            stats: big.stats.clone(),
        }
    } else {
        groebner(ring, &kept, limits)?
    };
    out.stats.pairs_reduced += gb.stats.pairs_reduced;
    Ok(out)
}

/// Saturates by each polynomial in turn.
pub fn saturate_all(gb: &GroebnerBasis, gs: &[APoly], limits: &Limits) -> Result<GroebnerBasis, AlgError> {
    let mut cur = gb.clone();
    for g in gs {
        cur = saturate(&cur, g, limits)?;
        if cur.is_unit() {
            break;
        }
    }
    Ok(cur)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Dimension {
    /// No solutions over the algebraic closure of `ℚ(θ)`.
    Empty,
    /// Finitely many solutions counted with multiplicity.
    Zero { count: usize },
    /// `independent` is a maximal set of unknowns free on some component.
    Positive { dim: usize, independent: Vec<usize> },
}

/// Monomials outside the leading-term ideal; `None` when there are infinitely many.
pub fn standard_monomials(gb: &GroebnerBasis, cap: usize) -> Option<Vec<Mono>> {
    let n = gb.ring.n;
    let lms = gb.leading_monomials();
    let mut bounds = vec![None; n];
    for m in &lms {
        let nz: Vec<usize> = (0..n).filter(|&i| m[i] > 0).collect();
        if nz.len() == 1 {
            let i = nz[0];
            bounds[i] = Some(bounds[i].map_or(m[i], |b: u16| b.min(m[i])));
        }
    }
    if bounds.iter().any(|b| b.is_none()) {
        return None;
    }
    let mut out = Vec::new();
    let mut stack = vec![vec![0u16; n]];
    let mut seen = std::collections::HashSet::new();
    while let Some(m) = stack.pop() {
        if !seen.insert(m.clone()) || lms.iter().any(|l| mono_divides(l, &m)) {
            continue;
        }
        out.push(m.clone());
        if out.len() > cap {
            return None;
        }
        for i in 0..n {
            let mut e = m.clone();
            e[i] += 1;
            stack.push(e);
        }
    }
    out.sort_by(|a, b| gb.ring.order.cmp(a, b));
    Some(out)
}

pub fn dimension(gb: &GroebnerBasis) -> Dimension {
    if gb.is_unit() {
        return Dimension::Empty;
    }
    if let Some(sm) = standard_monomials(gb, 1_000_000) {
        return Dimension::Zero { count: sm.len() };
    }
    let n = gb.ring.n;
    let supports: Vec<Vec<usize>> =
        gb.leading_monomials().iter().map(|m| (0..n).filter(|&i| m[i] > 0).collect()).collect();
    let mut best = Vec::new();
    let mut cur = Vec::new();
    search(0, n, &supports, &mut cur, &mut best);
    Dimension::Positive { dim: best.len(), independent: best }
}

// A set is independent when no leading monomial is supported inside it.
fn search(i: usize, n: usize, supports: &[Vec<usize>], cur: &mut Vec<usize>, best: &mut Vec<usize>) {
    if cur.len() + (n - i) <= best.len() {
        return;
    }
    if i == n {
        *best = cur.clone();
        return;
    }
    cur.push(i);
    let ok = supports.iter().all(|s| !s.iter().all(|v| cur.contains(v)));
    if ok {
        search(i + 1, n, supports, cur, best);
    }
    cur.pop();
    search(i + 1, n, supports, cur, best);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algsolve::testutil::system;

    #[test]
    fn saturation_removes_degenerate_component() {
        // x*(x - 1) = 0 with x ≠ 0 leaves x = 1.
        let (ring, f) = system(&[], &["x"], &["x^2 - x", "x"], TermOrder::Degrevlex);
        let gb = groebner(&ring, &f[..1], &Limits::default()).unwrap();
        let sat = saturate(&gb, &f[1], &Limits::default()).unwrap();
        assert_eq!(sat.gens.len(), 1);
        assert_eq!(ring.fmt(&sat.gens[0], &[], &["x".into()]), "x - 1");
    }

    #[test]
    fn saturation_with_parameters() {
        let (ring, f) = system(&["a"], &["x", "y"], &["x*y - a*x", "x^2 - x*y", "x"], TermOrder::Lex);
        let gb = groebner(&ring, &f[..2], &Limits::default()).unwrap();
        let sat = saturate(&gb, &f[2], &Limits::default()).unwrap();
        assert_eq!(dimension(&sat), Dimension::Zero { count: 1 });
    }

    #[test]
    fn counting_and_dimension() {
        let (ring, f) = system(&["k"], &["s"], &["s^2 + k^2"], TermOrder::Degrevlex);
        let gb = groebner(&ring, &f, &Limits::default()).unwrap();
        assert_eq!(dimension(&gb), Dimension::Zero { count: 2 });

        let (ring, f) = system(&[], &["x", "y", "z"], &["x*y", "z - 1"], TermOrder::Degrevlex);
        let gb = groebner(&ring, &f, &Limits::default()).unwrap();
        match dimension(&gb) {
            Dimension::Positive { dim, independent } => {
                assert_eq!(dim, 1);
                assert_eq!(independent.len(), 1);
                assert!(independent[0] < 2);
            }
            d => panic!("{d:?}"),
        }
        let (ring, f) = system(&[], &["x"], &["x", "x - 1"], TermOrder::Degrevlex);
        let gb = groebner(&ring, &f, &Limits::default()).unwrap();
        assert_eq!(dimension(&gb), Dimension::Empty);
    }
}

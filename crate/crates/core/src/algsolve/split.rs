//! Gröbner computation that branches whenever a basis element factors,
//! saturating each branch by the nondegeneracy conditions.

use std::time::Instant;

use serde::Serialize;

use super::apoly::{APoly, Ring};
use super::factor::factor;
use super::groebner::{buchberger, GroebnerBasis, Limits, Outcome};
use super::ideal::saturate_all;
use super::AlgError;

/// Polynomials with more coefficient terms than this are not factored while
/// splitting; decomposition handles them later.
const FACTOR_TERM_LIMIT: usize = 120;

#[derive(Debug, Clone, Default, Serialize)]
pub struct SplitStats {
    pub branches: usize,
    pub discarded: usize,
    pub millis: u64,
}

#[derive(Debug, Clone)]
pub struct SplitSolution {
    /// Saturated, pairwise disjoint in the zero-dimensional case.
    pub components: Vec<GroebnerBasis>,
    pub stats: SplitStats,
}

/// Factors of `h` that involve unknowns, each raised to its multiplicity;
/// `None` unless there are at least two distinct ones.
pub fn split_factors(ring: &Ring, h: &APoly) -> Option<Vec<APoly>> {
    let size: usize = h.terms.iter().map(|(_, c)| c.num_terms()).sum();
    if size > FACTOR_TERM_LIMIT || h.terms.len() < 2 && h.terms.first().map_or(true, |(m, _)| m.iter().sum::<u16>() <= 1) {
        return None;
    }
    let p = ring.to_mpoly(h);
    let fz = factor(&p);
    let relevant: Vec<APoly> = fz
        .factors
        .iter()
        .filter(|(f, _)| f.vars().iter().any(|&v| v >= ring.k))
        .map(|(f, e)| ring.primitive(&ring.from_mpoly(&f.pow(*e))))
        .collect();
    (relevant.len() >= 2).then_some(relevant)
}

pub fn split_solve(ring: &Ring, input: &[APoly], nondeg: &[APoly], limits: &Limits) -> Result<SplitSolution, AlgError> {
    let t0 = Instant::now();
    let mut stats = SplitStats::default();
    let mut components = Vec::new();
    let mut tasks: Vec<(Vec<APoly>, Vec<APoly>)> = vec![(input.to_vec(), Vec::new())];
    let mut hook = |h: &APoly| split_factors(ring, h);
    while let Some((gens, excl)) = tasks.pop() {
        stats.branches += 1;
        let remaining = limits.max_time.checked_sub(t0.elapsed()).ok_or_else(|| {
            AlgError::Inconclusive(format!("solver time limit {:?} exceeded", limits.max_time))
        })?;
        let lim = Limits { max_steps: limits.max_steps, max_time: remaining };
        let (basis, factors) = match buchberger(ring, &gens, &lim, &mut hook)? {
            Outcome::Split { basis, factors } => (basis, factors),
            Outcome::Done(gb) => {
                if gb.is_unit() {
                    stats.discarded += 1;
                    continue;
                }
                let mut conds: Vec<APoly> = nondeg.to_vec();
                conds.extend(excl.iter().cloned());
                let sat = saturate_all(&gb, &conds, &lim)?;
                if sat.is_unit() {
                    stats.discarded += 1;
                    continue;
                }
                match sat.gens.iter().find_map(|g| split_factors(ring, g)) {
                    Some(factors) => (sat.gens.clone(), factors),
                    None => {
                        components.push(sat);
                        continue;
                    }
                }
            }
        };
        // Later branches exclude the zero sets of earlier factors.
        for (i, f) in factors.iter().enumerate().rev() {
            let mut g = basis.clone();
            g.push(f.clone());
            let mut ex = excl.clone();
            ex.extend(factors[..i].iter().cloned());
            tasks.push((g, ex));
        }
    }
    stats.millis = t0.elapsed().as_millis() as u64;
    Ok(SplitSolution { components, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algsolve::testutil::system;
    use crate::algsolve::{dimension, Dimension, TermOrder};

    #[test]
    fn product_equations_branch() {
        // x*(y - a) = 0, y*(x - b) = 0 with x*y ≠ 0 leaves x = b, y = a.
        let (ring, f) = system(&["a", "b"], &["x", "y"], &["x*y - a*x", "x*y - b*y", "x*y"], TermOrder::Degrevlex);
        let sol = split_solve(&ring, &f[..2], &f[2..], &Limits::default()).unwrap();
        assert_eq!(sol.components.len(), 1);
        assert_eq!(dimension(&sol.components[0]), Dimension::Zero { count: 1 });
    }

    #[test]
    fn quartic_splits_into_three() {
        let (ring, f) = system(&["k"], &["s"], &["s^4 - k^4"], TermOrder::Degrevlex);
        let sol = split_solve(&ring, &f, &[], &Limits::default()).unwrap();
        let mut counts: Vec<usize> = sol
            .components
            .iter()
            .map(|c| match dimension(c) {
                Dimension::Zero { count } => count,
                d => panic!("{d:?}"),
            })
            .collect();
        counts.sort();
        assert_eq!(counts, vec![1, 1, 2]);
    }
}

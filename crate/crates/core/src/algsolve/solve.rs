use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ansatz::AlgebraicSystem;

use super::apoly::{APoly, Ring};
use super::decompose::{triangular_decompose, Decomposition};
use super::groebner::{GroebnerBasis, Limits};
use super::ideal::{dimension, Dimension};
use super::split::{split_solve, SplitStats};
use super::{AlgError, TermOrder};

/// Everything the symmetry stage needs from solving one algebraic system.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub ring: Ring,
    /// Saturated components from the factorizing computation.
    pub components: Vec<GroebnerBasis>,
    pub decomposition: Decomposition,
    pub dimension: Dimension,
    pub split: SplitStats,
    /// Parameter points used for numeric sign checks.
    pub samples: Vec<Vec<f64>>,
}

/// Combined dimension of a union of components: the maximum dimension, or
/// the summed count when all are finite.
pub fn dimension_and_count(components: &[GroebnerBasis]) -> Dimension {
    let mut total = 0;
    let mut best: Option<Dimension> = None;
    for c in components {
        match dimension(c) {
            Dimension::Empty => {}
            Dimension::Zero { count } => total += count,
            d @ Dimension::Positive { .. } => {
                let bigger = match (&best, &d) {
                    (Some(Dimension::Positive { dim: a, .. }), Dimension::Positive { dim: b, .. }) => b > a,
                    _ => true,
                };
                if bigger {
                    best = Some(d);
                }
            }
        }
    }
    match best {
        Some(d) => d,
        None if total == 0 => Dimension::Empty,
        None => Dimension::Zero { count: total },
    }
}

/// Positive parameter samples for numeric checks; fixed values when specialized.
pub fn parameter_samples(sys: &AlgebraicSystem, seed: u64, count: usize) -> Vec<Vec<f64>> {
    if let Some(pt) = &sys.specialization {
        let v: Vec<f64> = pt.iter().map(|r| r.to_f64()).collect();
        return vec![v; count.min(1)];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7e57);
    (0..count).map(|_| (0..sys.k).map(|_| rng.gen_range(0.3..2.7)).collect()).collect()
}

pub fn equations_in(ring: &Ring, sys: &AlgebraicSystem) -> (Vec<APoly>, Vec<APoly>) {
    let eqs = sys.equations.iter().map(|p| ring.from_mpoly(p)).collect();
    let nd = sys.nondegeneracy.iter().map(|p| ring.from_mpoly(p)).collect();
    (eqs, nd)
}

pub fn solve_system(sys: &AlgebraicSystem, seed: u64, limits: &Limits) -> Result<SolveOutcome, AlgError> {
    let ring = Ring::new(sys.num_unknowns(), sys.k, TermOrder::Degrevlex);
    let (eqs, nd) = equations_in(&ring, sys);
    let sol = split_solve(&ring, &eqs, &nd, limits)?;
    let samples = parameter_samples(sys, seed, 3);
    let decomposition = triangular_decompose(&sol.components, seed, &samples, limits)?;
    let dimension = dimension_and_count(&sol.components);
    Ok(SolveOutcome { ring, components: sol.components, decomposition, dimension, split: sol.stats, samples })
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ansatz::AlgebraicSystem;
use crate::cas::{MPoly, Rational};

use super::AlgError;

const MAX_DRAWS: usize = 100;

fn draw(rng: &mut ChaCha8Rng, k: usize) -> Vec<Rational> {
    (0..k)
        .map(|_| {
            let num = rng.gen_range(1..=29i64);
            let den = rng.gen_range(1..=7i64);
            Rational::new(num, den)
        })
        .collect()
}

/// Replaces θ by seeded random positive rationals avoiding zeros of the
/// recorded denominators. The result is marked probabilistic.
pub fn specialize_random(sys: &AlgebraicSystem, seed: u64) -> Result<AlgebraicSystem, AlgError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    specialize_from(sys, || draw(&mut rng, sys.k))
}

pub(crate) fn specialize_from(sys: &AlgebraicSystem, mut sample: impl FnMut() -> Vec<Rational>) -> Result<AlgebraicSystem, AlgError> {
    for _ in 0..MAX_DRAWS {
        let pt = sample();
        let vals: Vec<(usize, Rational)> = pt.iter().cloned().enumerate().collect();
        if sys.theta_denominators.iter().any(|d| d.partial_eval(&vals).is_zero()) {
            continue;
        }
        let sub = |p: &MPoly| p.partial_eval(&vals);
        let equations: Vec<MPoly> = sys.equations.iter().map(sub).filter(|p| !p.is_zero()).collect();
        let nondeg: Vec<MPoly> = sys.nondegeneracy.iter().map(sub).collect();
        // A nondegeneracy condition that vanishes identically means the point is special.
        if nondeg.iter().any(|p| p.is_zero()) {
            continue;
        }
        let mut out = sys.clone();
        out.equations = equations;
        out.nondegeneracy = nondeg.into_iter().filter(|p| !p.is_constant()).collect();
        out.theta_denominators = Vec::new();
        out.probabilistic = true;
        out.specialization = Some(pt);
        return Ok(out);
    }
    Err(AlgError::Inconclusive(format!("no admissible specialization point in {MAX_DRAWS} draws")))
}

//! Solving the polynomial systems produced by the ansatz: Gröbner bases over
//! `ℚ(θ)`, saturation, dimension and counting, decomposition into branches,
//! and exact nullspaces over `ℚ`.

mod apoly;
mod decompose;
mod factor;
mod groebner;
mod ideal;
mod linalg;
mod order;
mod solve;
pub(crate) mod specialize;
mod split;

pub use apoly::{APoly, Mono, Ring};
pub use decompose::{branch_points, branch_points_c, check_disjoint, minimal_polynomial, triangular_decompose, Decomposition, RealFlag, SolutionBranch};
pub use factor::{complex_roots, complex_roots_c, factor, Factorization};
pub use groebner::{check_buchberger, check_membership, groebner, interreduce, normal_form, spoly, GbStats, GroebnerBasis, Limits};
pub use ideal::{dimension, saturate, saturate_all, standard_monomials, Dimension};
pub use linalg::{nullspace, nullspace_rows};
pub use order::TermOrder;
pub use solve::{dimension_and_count, equations_in, parameter_samples, solve_system, SolveOutcome};
pub use specialize::specialize_random;
pub use split::{split_factors, split_solve, SplitSolution, SplitStats};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AlgError {
    /// A resource limit was hit; the result is unknown rather than wrong.
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("{0}")]
    Internal(String),
}

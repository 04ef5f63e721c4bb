//! Symmetry transformations from solution branches, their group structure,
//! and identifiability/observability verdicts.

mod classify;
mod continuous;
mod group;
mod transform;

pub use classify::{
    classify, filter_by_bounds, positive_status, positivity_bounds, BoundFilter, Bounds, ClassifyInput, SioReport,
    VarStatus, Verdict, VerdictEntry, SGI_QUALIFIER,
};
pub use continuous::{generator_from, generators, in_span, Generator};
pub use group::{catalog_name, group_structure, SymmetryGroup};
pub use transform::{ansatz_maps, compose, extract_transformations, Action, ElementSet, PrintedMaps, SymmetryTransformation};

use thiserror::Error;

use crate::algsolve::AlgError;
use crate::cas::CasError;
use crate::verify::VerifyError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SymmetryError {
    /// A solver result that fails verification; always a bug.
    #[error("internal error: {0}")]
    Internal(String),
    #[error("numerical evaluation failed: {0}")]
    Numeric(String),
    #[error("composition needs explicit elements")]
    NotExplicit,
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Cas(#[from] CasError),
    #[error(transparent)]
    Alg(#[from] AlgError),
}

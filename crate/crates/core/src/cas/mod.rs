//! Exact arithmetic kernel: rationals, sparse multivariate polynomials and
//! reduced rational functions over a registry of named variables.

mod gcd;
mod mpoly;
mod ratfunc;
mod rational;
mod registry;

pub use gcd::{content_wrt, gcd, gcd_many, primitive_part_wrt, pseudo_rem};
pub use mpoly::{Exps, MPoly, PolyDisplay};
pub use ratfunc::RatFunc;
pub use rational::Rational;
pub use registry::{VarKind, VarRegistry};

pub(crate) use mpoly::{add_exps, divides, sub_exps};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CasError {
    #[error("registry mismatch ({0} vs {1} variables)")]
    RegistryMismatch(usize, usize),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("denominator is the zero polynomial")]
    ZeroDenominator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolyOp {
    Add,
    Sub,
    Mul,
}

pub fn poly_arith(a: &MPoly, b: &MPoly, op: PolyOp) -> Result<MPoly, CasError> {
    a.check_same_registry(b)?;
    Ok(match op {
        PolyOp::Add => a.add(b),
        PolyOp::Sub => a.sub(b),
        PolyOp::Mul => a.mul(b),
    })
}

pub fn poly_diff(p: &MPoly, v: usize) -> Result<MPoly, CasError> {
    if v >= p.nvars() {
        return Err(CasError::UnknownVariable(format!("#{v}")));
    }
    Ok(p.diff(v))
}

pub fn ratfunc_normalize(num: MPoly, den: MPoly) -> Result<RatFunc, CasError> {
    RatFunc::new(num, den)
}

pub fn substitute(expr: &RatFunc, bindings: &[(usize, RatFunc)]) -> Result<RatFunc, CasError> {
    expr.substitute(bindings)
}

pub fn multivariate_gcd(a: &MPoly, b: &MPoly) -> Result<MPoly, CasError> {
    a.check_same_registry(b)?;
    Ok(gcd(a, b))
}

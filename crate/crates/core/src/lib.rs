//! Symmetry-based structural identifiability and observability analysis of
//! rational ODE control systems.

pub mod algsolve;
pub mod analysis;
pub mod ansatz;
pub mod cas;
pub mod detsys;
pub mod model;
pub mod symmetry;
pub mod verify;

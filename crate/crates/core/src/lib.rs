//! Verification toolkit for Lie bialgebras, r-matrices, Poisson structures
//! and the integrable systems built from them.

pub mod dynsys;
pub mod exact;
pub mod exchange;
pub mod expr;
pub mod flow;
pub mod liealg;
pub mod rmatrix;
pub mod symplectic;

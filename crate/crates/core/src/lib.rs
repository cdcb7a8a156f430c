//! Counting rational points near nondegenerate manifolds: enumeration,
//! Fourier decomposition, sub-level set diagnostics and exact exponent formulas.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod counting;
pub mod error;
pub mod fourier;
pub mod manifold;
pub mod quadrature;
pub mod regimes;
pub mod sublevel;
pub mod weights;

pub use error::{Condition, Error, Result};
pub use manifold::MongeMap;

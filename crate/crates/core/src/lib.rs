//! Regularized multi-species interaction energies of edge dislocations,
//! Riesz and logarithmic particles.
//!
//! The closed-form kernel layer (`geom`, the elasticity fields and the
//! potentials) is generic over [`Real`]; everything that tabulates or
//! integrates works in `f64`. The aliases below fix the scalar for callers.

pub mod energy;
pub mod error;
pub mod geom;
pub mod kernels;
pub mod measures;
pub mod quadrature;
pub mod regularize;
pub mod scalar;
pub mod summation;
pub mod tables;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Vec2d = geom::Vec2<f64>;
pub type Matrix2d = geom::Matrix2<f64>;

//! One-dimensional rules, adaptive Gauss–Kronrod and polar region quadrature.

mod adaptive;
mod gauss;
mod polar;

pub use adaptive::{gk21, Adaptive, Estimate};
pub use gauss::{gauss_legendre, GaussLegendre};
pub use polar::{two_center, Constraint, PolarRegion, PolarRule};

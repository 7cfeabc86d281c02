//! Riesz decomposition `𝒱_a = C′ (𝒱_bψ)‾ ∗ (𝒱_bψ) + V_reg` with `b = 1 + a/2`.

use std::f64::consts::TAU;

use rayon::prelude::*;

use crate::quadrature::{gauss_legendre, two_center, Estimate, PolarRule};
use crate::tables::{clustered_knots, PiecewiseSpline};
use crate::Vec2d;

/// Continuous cut-off `ψ(x) = 1 ∧ (2 − |x|) ∨ 0` as a function of `|x|`.
pub fn cutoff(r: f64) -> f64 {
    (2.0 - r).clamp(0.0, 1.0)
}

/// `(𝒱_b ∗ 𝒱_b)(e₁) = ∫ |e₁ − y|^{−b} |y|^{−b} dy` for `1 < b < 2`.
pub fn composition_constant(b: f64, rule: &PolarRule) -> Estimate {
    let e1 = Vec2d::new(1.0, 0.0);
    two_center(
        Vec2d::zero(),
        b,
        e1,
        b,
        &[],
        &[],
        &[],
        &[],
        Some(2.0 * b),
        rule,
        |y| (e1 - y).norm().powf(-b) * y.norm().powf(-b),
    )
}

/// `∫ |x−y|^{−b}|y|^{−b} [1 − ψ(x−y)ψ(y)] dy` at `x = (r, 0)`.
pub fn remainder_integral(r: f64, b: f64, rule: &PolarRule) -> f64 {
    if r == 0.0 {
        return remainder_at_origin(b);
    }
    let x = Vec2d::new(r, 0.0);
    let kinks = [
        (Vec2d::zero(), 1.0),
        (Vec2d::zero(), 2.0),
        (x, 1.0),
        (x, 2.0),
    ];
    two_center(
        Vec2d::zero(),
        b,
        x,
        b,
        &[],
        &[],
        &[],
        &kinks,
        Some(2.0 * b),
        rule,
        |y| {
            let (ry, rxy) = (y.norm(), (x - y).norm());
            let w = 1.0 - cutoff(ry) * cutoff(rxy);
            if w == 0.0 {
                0.0
            } else {
                w * rxy.powf(-b) * ry.powf(-b)
            }
        },
    )
    .value
}

fn remainder_at_origin(b: f64) -> f64 {
    let g = gauss_legendre(40);
    let inner = g.integrate(1.0, 2.0, |rho| {
        rho.powf(1.0 - 2.0 * b) * (1.0 - (2.0 - rho).powi(2))
    });
    let tail = 2f64.powf(2.0 - 2.0 * b) / (2.0 * b - 2.0);
    TAU * (inner + tail)
}

/// Radial table of `V_reg` on `[0, 4]`; beyond 4 the remainder equals `𝒱_a`.
pub(crate) fn build_reg_table(a: f64, c_prime: f64, nodes: usize, tol: f64) -> PiecewiseSpline {
    let b = 1.0 + 0.5 * a;
    let rule = PolarRule::with_tol(tol);
    // The cut-off profiles have kinks at radii 1 and 2, so their correlation
    // has kinks where those circles touch.
    let breaks = [1.0, 2.0, 3.0];
    let xs = clustered_knots(4.0, nodes, &breaks, 8);
    let ys: Vec<f64> = xs
        .par_iter()
        .map(|&r| c_prime * remainder_integral(r, b, &rule))
        .collect();
    PiecewiseSpline::new(xs, ys, &breaks)
}

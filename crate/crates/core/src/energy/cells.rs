//! Cell-pair averages of a kernel on a uniform grid.
//!
//! For square cells `Q_i`, `Q_j` of side `h`,
//! `(1/h⁴) ∬_{Q_i × Q_j} f(x − y) = ∫ f(dh + z) Λ(z₁/h) Λ(z₂/h) dz / h²` with
//! `d = i − j` and the tent `Λ(u) = (1 − |u|)⁺`. Using these averages as the
//! interaction matrix of piecewise-constant densities is a Galerkin
//! projection, so a positive semi-definite kernel stays positive
//! semi-definite on the grid.

use rayon::prelude::*;

use crate::quadrature::gauss_legendre;
use crate::Vec2d;

const NEAR: isize = 2;
const MAX_DEPTH: u32 = 24;

/// Averages `A(d)` for offsets `d ∈ {−m, …, m}²`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CellKernel {
    pub h: f64,
    pub m: usize,
    pub values: Vec<f64>,
}

impl CellKernel {
    pub fn build(h: f64, m: usize, f: impl Fn(Vec2d) -> f64 + Sync) -> Self {
        Self::build_with(h, m, 3, 10, f)
    }

    /// Gauss orders `far` for regular offsets and `near` for the leaves of the
    /// subdivision towards the singular point.
    pub fn build_with(
        h: f64,
        m: usize,
        far: usize,
        near: usize,
        f: impl Fn(Vec2d) -> f64 + Sync,
    ) -> Self {
        let w = 2 * m + 1;
        let values = (0..w * w)
            .into_par_iter()
            .map(|k| {
                let di = (k % w) as isize - m as isize;
                let dj = (k / w) as isize - m as isize;
                offset_average(h, di, dj, far, near, &f)
            })
            .collect();
        Self { h, m, values }
    }

    pub fn at(&self, di: isize, dj: isize) -> f64 {
        let m = self.m as isize;
        if di.abs() > m || dj.abs() > m {
            return 0.0;
        }
        let w = 2 * self.m + 1;
        self.values[(dj + m) as usize * w + (di + m) as usize]
    }
}

fn tent(z: f64, h: f64) -> f64 {
    (1.0 - z.abs() / h).max(0.0)
}

fn offset_average(
    h: f64,
    di: isize,
    dj: isize,
    far: usize,
    near_order: usize,
    f: &(impl Fn(Vec2d) -> f64 + Sync),
) -> f64 {
    let centre = Vec2d::new(di as f64 * h, dj as f64 * h);
    let g = |z: Vec2d| f(centre + z) * tent(z.x, h) * tent(z.y, h);
    let quads = [(-h, 0.0, -h, 0.0), (0.0, h, -h, 0.0), (-h, 0.0, 0.0, h), (0.0, h, 0.0, h)];
    let near = di.abs() <= NEAR && dj.abs() <= NEAR;
    let sum: f64 = if near {
        // The kernel may be singular at z = −dh, a corner of the dyadic squares.
        let sing = -centre;
        quads.iter().map(|&(x0, x1, y0, y1)| refine(&g, near_order, x0, x1, y0, y1, sing, 0)).sum()
    } else {
        let rule = gauss_legendre(far);
        quads.iter().map(|&(x0, x1, y0, y1)| square(&g, rule, x0, x1, y0, y1)).sum()
    };
    sum / (h * h)
}

fn square(
    g: &impl Fn(Vec2d) -> f64,
    rule: &crate::quadrature::GaussLegendre,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
) -> f64 {
    let mut s = 0.0;
    for (y, wy) in rule.mapped(y0, y1) {
        for (x, wx) in rule.mapped(x0, x1) {
            s += wx * wy * g(Vec2d::new(x, y));
        }
    }
    s
}

/// Average of `f` over `[c − h/2, c + h/2]²`, refined towards `sing` when the
/// box lies within one side length of it.
pub(crate) fn box_average(f: &impl Fn(Vec2d) -> f64, c: Vec2d, h: f64, sing: Vec2d) -> f64 {
    let (x0, x1, y0, y1) = (c.x - 0.5 * h, c.x + 0.5 * h, c.y - 0.5 * h, c.y + 0.5 * h);
    let near = (c.x - sing.x).abs() <= 1.5 * h && (c.y - sing.y).abs() <= 1.5 * h;
    let sum = if near {
        // Quarter the box so the singular point is a corner.
        let mut acc = 0.0;
        for (a0, a1) in [(x0, c.x), (c.x, x1)] {
            for (b0, b1) in [(y0, c.y), (c.y, y1)] {
                acc += refine(f, 8, a0, a1, b0, b1, sing, 0);
            }
        }
        acc
    } else {
        square(f, gauss_legendre(4), x0, x1, y0, y1)
    };
    sum / (h * h)
}

#[allow(clippy::too_many_arguments)]
fn refine(
    g: &impl Fn(Vec2d) -> f64,
    order: usize,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    sing: Vec2d,
    depth: u32,
) -> f64 {
    let eps = 1e-12 * (x1 - x0);
    let touches = sing.x >= x0 - eps && sing.x <= x1 + eps && sing.y >= y0 - eps && sing.y <= y1 + eps;
    if !touches || depth >= MAX_DEPTH {
        return square(g, gauss_legendre(order), x0, x1, y0, y1);
    }
    let (xm, ym) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
    refine(g, order, x0, xm, y0, ym, sing, depth + 1)
        + refine(g, order, xm, x1, y0, ym, sing, depth + 1)
        + refine(g, order, x0, xm, ym, y1, sing, depth + 1)
        + refine(g, order, xm, x1, ym, y1, sing, depth + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_and_quadratics_are_exact() {
        let k = CellKernel::build(0.5, 3, |_| 2.0);
        assert!(k.values.iter().all(|v| (v - 2.0).abs() < 1e-13));
        // For f = |x|², the cell-pair average is |d h|² + h²/3.
        let h = 0.25;
        let k = CellKernel::build(h, 3, |x| x.norm_sq());
        for (di, dj) in [(0, 0), (1, 0), (2, 1), (3, 3)] {
            let d = Vec2d::new(di as f64 * h, dj as f64 * h);
            assert!((k.at(di, dj) - (d.norm_sq() + h * h / 3.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn log_self_cell_matches_radial_oracle() {
        // Difference of two uniform points in the unit square has density
        // (1 − |u|)(1 − |v|); integrate ln|d| against it in polar form.
        let rad = |big_r: f64, c: f64, s: f64| {
            let m = |k: f64| big_r.powf(k + 1.0) * (big_r.ln() / (k + 1.0) - 1.0 / ((k + 1.0) * (k + 1.0)));
            m(1.0) - (c + s) * m(2.0) + c * s * m(3.0)
        };
        let oracle = 8.0
            * crate::quadrature::Adaptive::new(1e-14, 1e-14)
                .integrate(&[0.0, std::f64::consts::FRAC_PI_4], |t| {
                    let (s, c) = t.sin_cos();
                    rad(1.0 / c, c, s)
                })
                .unwrap()
                .value;
        let k = CellKernel::build(1.0, 0, |x| x.norm().ln());
        assert!((k.at(0, 0) - oracle).abs() < 1e-10, "{} vs {oracle}", k.at(0, 0));
        // Scaling: ln(h|d|) averages to ln h + oracle.
        let k = CellKernel::build(0.1, 1, |x| x.norm().ln());
        assert!((k.at(0, 0) - (0.1f64.ln() + oracle)).abs() < 1e-10);
    }
}

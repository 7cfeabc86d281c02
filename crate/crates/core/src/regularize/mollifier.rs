//! The radial bump `φ(x) = (4/π)(1 − |x|²)³` and its autocorrelation
//! `Φ = φ̄ ∗ φ`, tabulated together with the radial moments used by the
//! closed-form mollified potentials.

use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::quadrature::gauss_legendre;
use crate::tables::CubicSpline;

const KNOTS: usize = 4096;
const SERIES_TERMS: usize = 48;

/// Unit-mass radial mollifier with its derived profile `Φ`.
#[derive(Debug, Clone)]
pub struct Mollifier {
    big_phi: CubicSpline,
    m0: CubicSpline,
    m2: CubicSpline,
    mlog: CubicSpline,
    /// `∫ Φ |y|^{2k} dy` for `k = 0, 1, …`.
    even_moments: Vec<f64>,
}

/// `∫_{−α}^{α} (A + B cos t)³ dt`.
fn cubic_arc(a: f64, b: f64, alpha: f64) -> f64 {
    let (s, c) = alpha.sin_cos();
    let i0 = 2.0 * alpha;
    let i1 = 2.0 * s;
    let i2 = alpha + s * c;
    let i3 = 2.0 * (s - s * s * s / 3.0);
    a * a * a * i0 + 3.0 * a * a * b * i1 + 3.0 * a * b * b * i2 + b * b * b * i3
}

/// Integrand in the radius `s` of `Φ(ρ)`, with the angular integral done in
/// closed form.
fn phi_radial_integrand(rho: f64, s: f64) -> f64 {
    let c = 4.0 / PI;
    let a = 1.0 - s * s - rho * rho;
    let b = 2.0 * s * rho;
    let arc = if b == 0.0 {
        if a > 0.0 {
            TAU * a * a * a
        } else {
            0.0
        }
    } else {
        let cmin = -a / b;
        if cmin >= 1.0 {
            0.0
        } else {
            cubic_arc(a, b, cmin.max(-1.0).acos())
        }
    };
    c * c * s * (1.0 - s * s).powi(3) * arc
}

/// Radial breakpoints of the `Φ(ρ)` integrand.
fn phi_breaks(rho: f64) -> Vec<f64> {
    let lo = (rho - 1.0).max(0.0);
    let mut pts = vec![lo];
    if rho < 1.0 && 1.0 - rho > lo {
        pts.push(1.0 - rho);
    }
    pts.push(1.0);
    pts
}

/// `Φ(ρ)` by composite Gauss-Legendre. The integrand vanishes to high order
/// where the arc opens or closes, so fixed panels reach rounding level.
fn big_phi_direct(rho: f64) -> f64 {
    if rho >= 2.0 {
        return 0.0;
    }
    let g = gauss_legendre(20);
    let pts = phi_breaks(rho);
    let mut sum = 0.0;
    for w in pts.windows(2) {
        for k in 0..PANELS {
            let a = w[0] + (w[1] - w[0]) * k as f64 / PANELS as f64;
            let b = w[0] + (w[1] - w[0]) * (k + 1) as f64 / PANELS as f64;
            sum += g.integrate(a, b, |s| phi_radial_integrand(rho, s));
        }
    }
    sum
}

const PANELS: usize = 4;

impl Mollifier {
    /// The default profile, built once per process.
    pub fn standard() -> &'static Mollifier {
        static M: OnceLock<Mollifier> = OnceLock::new();
        M.get_or_init(Mollifier::build)
    }

    fn build() -> Self {
        let xs: Vec<f64> = (0..=KNOTS).map(|i| 2.0 * i as f64 / KNOTS as f64).collect();
        let ys: Vec<f64> = xs.par_iter().map(|&r| big_phi_direct(r)).collect();
        let g = gauss_legendre(8);
        // `2π t Φ(t) w` at the Gauss nodes of every knot interval.
        let nodes: Vec<Vec<(f64, f64)>> = xs
            .par_windows(2)
            .map(|w| {
                g.mapped(w[0], w[1])
                    .map(|(t, wt)| (t, TAU * t * big_phi_direct(t) * wt))
                    .collect()
            })
            .collect();
        let incr: Vec<[f64; 3]> = nodes
            .iter()
            .map(|v| {
                v.iter().fold([0.0; 3], |a, &(t, f)| {
                    [a[0] + f, a[1] + f * t * t, a[2] + f * t.ln()]
                })
            })
            .collect();
        let mut m0 = vec![0.0; xs.len()];
        let mut m2 = vec![0.0; xs.len()];
        let mut tail_log = vec![0.0; xs.len()];
        for i in 0..incr.len() {
            m0[i + 1] = m0[i] + incr[i][0];
            m2[i + 1] = m2[i] + incr[i][1];
        }
        for i in (0..incr.len()).rev() {
            tail_log[i] = tail_log[i + 1] + incr[i][2];
        }
        let total = m0[KNOTS];
        m0.iter_mut().for_each(|v| *v /= total);
        m2.iter_mut().for_each(|v| *v /= total);
        tail_log.iter_mut().for_each(|v| *v /= total);
        let even_moments = (0..SERIES_TERMS)
            .map(|k| {
                nodes
                    .iter()
                    .flatten()
                    .map(|&(t, f)| f * t.powi(2 * k as i32))
                    .sum::<f64>()
                    / total
            })
            .collect();
        Self {
            big_phi: CubicSpline::new(xs.clone(), ys),
            m0: CubicSpline::new(xs.clone(), m0),
            m2: CubicSpline::new(xs.clone(), m2),
            mlog: CubicSpline::new(xs, tail_log),
            even_moments,
        }
    }

    /// `φ(r)`.
    pub fn phi(&self, r: f64) -> f64 {
        if r >= 1.0 {
            0.0
        } else {
            4.0 / PI * (1.0 - r * r).powi(3)
        }
    }

    /// `Φ(r)`, supported in `r < 2`.
    pub fn big_phi(&self, r: f64) -> f64 {
        if r >= 2.0 {
            0.0
        } else {
            self.big_phi.eval(r).max(0.0)
        }
    }

    pub fn phi_delta(&self, r: f64, delta: f64) -> f64 {
        self.phi(r / delta) / (delta * delta)
    }

    pub fn big_phi_delta(&self, r: f64, delta: f64) -> f64 {
        self.big_phi(r / delta) / (delta * delta)
    }

    /// Mass of `Φ` inside radius `t`.
    pub fn mass_within(&self, t: f64) -> f64 {
        if t >= 2.0 {
            1.0
        } else {
            self.m0.eval(t.max(0.0))
        }
    }

    /// `∫_{|y|<t} Φ |y|² dy`.
    pub fn second_moment_within(&self, t: f64) -> f64 {
        if t >= 2.0 {
            self.even_moments[1]
        } else {
            self.m2.eval(t.max(0.0))
        }
    }

    /// `L(t) = ∫ Φ(y) log|t e₁ − y| dy`, equal to `log t` for `t ≥ 2`.
    pub fn log_average(&self, t: f64) -> f64 {
        if t >= 2.0 {
            return t.ln();
        }
        let tail = self.mlog.eval(t.max(0.0));
        if t <= 0.0 {
            tail
        } else {
            t.ln() * self.mass_within(t) + tail
        }
    }

    /// Factor `g(t)` with `Φ ∗ cos(2θ − σ) = g(|x|/δ) cos(2θ_x − σ)` at scale δ.
    pub fn quadrupole_factor(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= 2.0 {
            return 1.0 - self.even_moments[1] / (t * t);
        }
        self.mass_within(t) - self.second_moment_within(t) / (t * t)
    }

    /// `(Φ ∗ |·|^{−a})(t e₁)` for `t > 2` from the hypergeometric circle means.
    pub fn riesz_far(&self, a: f64, t: f64) -> f64 {
        debug_assert!(t > 2.0);
        let h = 0.5 * a;
        let z = 1.0 / (t * t);
        let mut coef = 1.0;
        let mut zk = 1.0;
        let mut sum = 0.0;
        for (k, m) in self.even_moments.iter().enumerate() {
            let term = coef * m * zk;
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
            let kf = k as f64;
            coef *= ((h + kf) / (kf + 1.0)).powi(2);
            zk *= z;
        }
        t.powf(-a) * sum
    }

    /// `∫ Φ |y|^{2k} dy`.
    pub fn even_moment(&self, k: usize) -> f64 {
        self.even_moments[k]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_has_unit_mass() {
        let m = Mollifier::standard();
        let g = gauss_legendre(20);
        let mass = g.integrate(0.0, 1.0, |r| TAU * r * m.phi(r));
        assert!((mass - 1.0).abs() < 1e-14);
        assert!((m.mass_within(2.0) - 1.0).abs() < 1e-15);
        assert!((m.mass_within(1.999_999) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fixed_rule_matches_adaptive_oracle() {
        for &rho in &[0.0, 0.25, 0.999, 1.0, 1.3, 1.97] {
            let oracle = crate::quadrature::Adaptive::new(1e-16, 1e-14)
                .estimate(&phi_breaks(rho), |s| phi_radial_integrand(rho, s))
                .value;
            assert!((big_phi_direct(rho) - oracle).abs() < 1e-13, "rho={rho}");
        }
    }

    #[test]
    fn big_phi_at_origin_is_l2_norm_of_phi() {
        let m = Mollifier::standard();
        // Φ(0) = ∫ φ² = (16/π²) · π/7.
        assert!((m.big_phi(0.0) - 16.0 / (7.0 * PI)).abs() < 1e-12);
        assert!(m.big_phi(2.0) == 0.0 && m.big_phi(1.99) >= 0.0);
    }

    #[test]
    fn log_average_matches_quadrature_inside_support() {
        let m = Mollifier::standard();
        for &t in &[0.0, 0.3, 1.0, 1.7] {
            let direct = crate::quadrature::PolarRegion::new(crate::Vec2d::new(t, 0.0), 0.0)
                .scale(1e-6)
                .constrain(crate::quadrature::Constraint::disc(
                    crate::Vec2d::zero(),
                    2.0,
                ))
                .integrate(&crate::quadrature::PolarRule::with_tol(1e-12), |y| {
                    let r = y.norm();
                    let d = (y - crate::Vec2d::new(t, 0.0)).norm();
                    if d == 0.0 {
                        0.0
                    } else {
                        m.big_phi(r) * d.ln()
                    }
                });
            assert!(
                (direct.value - m.log_average(t)).abs() < 1e-8,
                "t={t}: {} vs {}",
                direct.value,
                m.log_average(t)
            );
        }
    }
}

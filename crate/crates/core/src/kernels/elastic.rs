//! Plane-strain isotropic elasticity fields of a single edge dislocation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Matrix2, Vec2};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LameParameters<T> {
    pub lambda: T,
    pub mu: T,
}

impl<T: Real> LameParameters<T> {
    pub fn new(lambda: T, mu: T) -> Result<Self> {
        if !(lambda.is_finite() && mu.is_finite()) || mu <= T::zero() || lambda + mu <= T::zero() {
            return Err(Error::Domain(format!(
                "Lamé parameters need mu > 0 and lambda + mu > 0 (got lambda={lambda:?}, mu={mu:?})"
            )));
        }
        Ok(Self { lambda, mu })
    }

    /// `μ(λ+μ) / (π(λ+2μ))`, the strength of the stress singularity.
    pub fn prefactor(&self) -> T {
        let (l, m) = (self.lambda, self.mu);
        m * (l + m) / (T::PI() * (l + m + m))
    }

    /// `ℂF = λ tr F Id + 2μ sym F`.
    pub fn apply(&self, f: &Matrix2<T>) -> Matrix2<T> {
        let two = T::lit(2.0);
        Matrix2::identity().scale(self.lambda * f.trace()) + f.sym().scale(two * self.mu)
    }

    /// `ℂA : B`.
    pub fn energy_product(&self, a: &Matrix2<T>, b: &Matrix2<T>) -> T {
        self.apply(a).frob(b)
    }
}

impl Default for LameParameters<f64> {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            mu: 1.0,
        }
    }
}

/// Angle of a Burgers vector with e₁, kept in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BurgersAngle<T>(T);

impl<T: Real> BurgersAngle<T> {
    pub fn new(phi: T) -> Self {
        let tau = T::TAU();
        let mut p = phi - tau * (phi / tau).floor();
        if p >= tau || p < T::zero() {
            p = T::zero();
        }
        Self(p)
    }

    pub fn phi(self) -> T {
        self.0
    }

    pub fn vector(self) -> Vec2<T> {
        Vec2::unit(self.0)
    }

    /// `b^⊥`, the clockwise quarter turn of `b_φ`.
    pub fn perp(self) -> Vec2<T> {
        self.vector().perp_cw()
    }
}

fn polar_of<T: Real>(x: Vec2<T>) -> Result<(T, T)> {
    let r = x.norm();
    if !(r > T::zero()) || !x.is_finite() {
        return Err(Error::Domain("kernel evaluated at x = 0".into()));
    }
    Ok((r, x.angle()))
}

/// `K^φ` at polar coordinates; the caller guarantees `r > 0`.
pub fn strain_kernel_polar<T: Real>(
    r: T,
    theta: T,
    phi: T,
    lame: &LameParameters<T>,
) -> Matrix2<T> {
    let (l, m) = (lame.lambda, lame.mu);
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let rh = Vec2::unit(theta);
    let th = Vec2::new(-rh.y, rh.x);
    let (s, c) = (phi - theta).sin_cos();
    let k = Matrix2::outer(rh, rh).scale(m * s)
        + Matrix2::outer(rh, th).scale((two * l + three * m) * c)
        - Matrix2::outer(th, rh).scale(m * c)
        + Matrix2::outer(th, th).scale(m * s);
    k.scale(T::one() / (two * T::PI() * (l + two * m) * r))
}

/// Elastic strain `K^φ(x)` of an edge dislocation with Burgers angle φ at the origin.
pub fn strain_kernel<T: Real>(
    x: Vec2<T>,
    phi: BurgersAngle<T>,
    lame: &LameParameters<T>,
) -> Result<Matrix2<T>> {
    let (r, theta) = polar_of(x)?;
    Ok(strain_kernel_polar(r, theta, phi.phi(), lame))
}

/// Stress `ℂK^φ` at polar coordinates; the caller guarantees `r > 0`.
pub fn stress_kernel_polar<T: Real>(
    r: T,
    theta: T,
    phi: T,
    lame: &LameParameters<T>,
) -> Matrix2<T> {
    let rh = Vec2::unit(theta);
    let th = Vec2::new(-rh.y, rh.x);
    let (s, c) = (theta - phi).sin_cos();
    let m = (Matrix2::outer(rh, rh) + Matrix2::outer(th, th)).scale(-s)
        + (Matrix2::outer(rh, th) + Matrix2::outer(th, rh)).scale(c);
    m.scale(lame.prefactor() / r)
}

pub fn stress_kernel<T: Real>(
    x: Vec2<T>,
    phi: BurgersAngle<T>,
    lame: &LameParameters<T>,
) -> Result<Matrix2<T>> {
    let (r, theta) = polar_of(x)?;
    Ok(stress_kernel_polar(r, theta, phi.phi(), lame))
}

/// Closed-form displacement `w^φ(r, θ)` for any real θ. The branch cut sits
/// where θ wraps; callers integrating across it pass an unwrapped angle.
pub fn displacement_unwrapped<T: Real>(
    r: T,
    theta: T,
    phi: T,
    lame: &LameParameters<T>,
) -> Vec2<T> {
    let (l, m) = (lame.lambda, lame.mu);
    let two = T::lit(2.0);
    let half_pi = T::FRAC_PI_2();
    let (s, c) = (phi - theta).sin_cos();
    let a = m / (l + two * m);
    let b = (l + m) / (two * (l + two * m));
    let w = Vec2::unit(phi).scale(theta) + Vec2::unit(phi + half_pi).scale(-a * r.ln())
        - (Vec2::unit(theta).scale(s) + Vec2::unit(theta + half_pi).scale(c)).scale(b);
    w.scale(T::one() / T::TAU())
}

/// Displacement `w^φ(r, θ)` with θ strictly inside (0, 2π).
pub fn displacement_field<T: Real>(
    r: T,
    theta: T,
    phi: BurgersAngle<T>,
    lame: &LameParameters<T>,
) -> Result<Vec2<T>> {
    if !(r > T::zero()) {
        return Err(Error::Domain("displacement needs r > 0".into()));
    }
    if !(theta > T::zero() && theta < T::TAU()) {
        return Err(Error::Domain(
            "displacement is discontinuous across the cut θ ∈ {0, 2π}".into(),
        ));
    }
    Ok(displacement_unwrapped(r, theta, phi.phi(), lame))
}

/// `w^φ(r, 0+) − w^φ(r, 2π−)`.
pub fn displacement_jump<T: Real>(r: T, phi: BurgersAngle<T>, lame: &LameParameters<T>) -> Vec2<T> {
    displacement_unwrapped(r, T::zero(), phi.phi(), lame)
        - displacement_unwrapped(r, T::TAU(), phi.phi(), lame)
}

/// `𝔻F` with `𝔻² = ℂ` on symmetric matrices.
pub fn elasticity_sqrt_apply<T: Real>(
    f: &Matrix2<T>,
    lame: &LameParameters<T>,
) -> Result<Matrix2<T>> {
    let scale = f.norm().max(T::one());
    if !f.is_symmetric(T::lit(1e-12) * scale) {
        return Err(Error::Domain(
            "square root of the elasticity tensor acts on symmetric matrices".into(),
        ));
    }
    Ok(sqrt_apply_sym(&f.sym(), lame))
}

pub(crate) fn sqrt_apply_sym<T: Real>(f: &Matrix2<T>, lame: &LameParameters<T>) -> Matrix2<T> {
    let two = T::lit(2.0);
    let half_tr = f.trace() / two;
    let iso = Matrix2::identity().scale(half_tr);
    let dev = *f - iso;
    iso.scale((two * (lame.lambda + lame.mu)).sqrt()) + dev.scale((two * lame.mu).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn lame() -> LameParameters<f64> {
        LameParameters::default()
    }

    #[test]
    fn strain_example_at_unit_east() {
        let k = strain_kernel(Vec2::new(1.0, 0.0), BurgersAngle::new(0.0), &lame()).unwrap();
        let e = [0.0, 5.0 / (6.0 * PI), -1.0 / (6.0 * PI), 0.0];
        for (a, b) in k.entries().iter().zip(e) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn stress_is_elasticity_of_strain() {
        let l = LameParameters::new(0.7, 1.3).unwrap();
        for i in 0..20 {
            let x = Vec2::new(0.3 + 0.1 * i as f64, -0.8 + 0.13 * i as f64);
            let phi = BurgersAngle::new(0.4 * i as f64);
            let a = stress_kernel(x, phi, &l).unwrap();
            let b = l.apply(&strain_kernel(x, phi, &l).unwrap());
            assert!((a - b).norm() < 1e-14 * b.norm().max(1.0));
        }
    }

    #[test]
    fn stress_example_north() {
        let s = stress_kernel(Vec2::new(0.0, 1.0), BurgersAngle::new(0.0), &lame()).unwrap();
        let c = -1.0 * 2.0 / (PI * 3.0);
        assert!((s - Matrix2::identity().scale(c)).norm() < 1e-15);
    }

    #[test]
    fn origin_is_a_domain_error() {
        assert!(strain_kernel(Vec2::zero(), BurgersAngle::new(0.0), &lame()).is_err());
        assert!(stress_kernel(Vec2::zero(), BurgersAngle::new(1.0), &lame()).is_err());
        assert!(displacement_field(1.0, 0.0, BurgersAngle::new(0.0), &lame()).is_err());
    }

    #[test]
    fn sqrt_examples() {
        let l = lame();
        let d = elasticity_sqrt_apply(&Matrix2::identity(), &l).unwrap();
        assert!((d - Matrix2::identity().scale(2.0)).norm() < 1e-15);
        let f = Matrix2::new(0.0, 1.0, 1.0, 0.0);
        let d = elasticity_sqrt_apply(&f, &l).unwrap();
        assert!((d - f.scale(2f64.sqrt())).norm() < 1e-15);
        assert!(elasticity_sqrt_apply(&Matrix2::new(0.0, 1.0, 0.0, 0.0), &l).is_err());
    }

    #[test]
    fn displacement_two_radii() {
        let l = lame();
        let phi = BurgersAngle::new(0.9);
        let a = displacement_field(2.0, 1.3, phi, &l).unwrap();
        let b = displacement_field(1.0, 1.3, phi, &l).unwrap();
        let expect =
            Vec2::unit(0.9 + PI / 2.0).scale(-(1.0 / (2.0 * PI)) * (1.0 / 3.0) * 2f64.ln());
        assert!((a - b - expect).norm() < 1e-15);
    }

    #[test]
    fn angle_is_canonical() {
        assert_eq!(BurgersAngle::new(2.0 * PI).phi(), 0.0);
        assert!((BurgersAngle::new(-PI / 2.0).phi() - 1.5 * PI).abs() < 1e-15);
    }

    #[test]
    fn lame_validation() {
        assert!(LameParameters::new(1.0, 0.0).is_err());
        assert!(LameParameters::new(-2.0, 1.0).is_err());
        assert!(LameParameters::new(-0.5, 1.0).is_ok());
    }
}

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::kernels::elastic::BurgersAngle;
use crate::scalar::Real;

fn nonzero<T: Real>(x: Vec2<T>) -> Result<T> {
    let r = x.norm();
    if !(r > T::zero()) || !r.is_finite() {
        return Err(Error::Domain("potential evaluated at x = 0".into()));
    }
    Ok(r)
}

/// Interaction of two edge dislocations at separation `x`:
/// `−(b_i·b_j) log|x| − (b_i^⊥·x̂)(b_j^⊥·x̂)`.
pub fn edge_potential<T: Real>(
    x: Vec2<T>,
    phi_i: BurgersAngle<T>,
    phi_j: BurgersAngle<T>,
) -> Result<T> {
    let r = nonzero(x)?;
    let xh = x.scale(T::one() / r);
    let (bi, bj) = (phi_i.vector(), phi_j.vector());
    Ok(-bi.dot(bj) * r.ln() - phi_i.perp().dot(xh) * phi_j.perp().dot(xh))
}

/// The angular form `−cos(φ_i−φ_j) log r + cos²(θ − (φ_i+φ_j)/2)`.
///
/// It exceeds [`edge_potential`] by the constant `(1 + cos(φ_i−φ_j))/2`.
pub fn edge_potential_polar<T: Real>(
    r: T,
    theta: T,
    phi_i: BurgersAngle<T>,
    phi_j: BurgersAngle<T>,
) -> Result<T> {
    if !(r > T::zero()) {
        return Err(Error::Domain("polar edge potential needs r > 0".into()));
    }
    let (pi, pj) = (phi_i.phi(), phi_j.phi());
    let c = (theta - (pi + pj) / T::lit(2.0)).cos();
    Ok(-(pi - pj).cos() * r.ln() + c * c)
}

/// Riesz potential `|x|^{−a}`.
pub fn riesz_potential<T: Real>(x: Vec2<T>, a: T) -> Result<T> {
    let r = nonzero(x)?;
    Ok(r.powf(-a))
}

/// Logarithmic potential `−log|x|`.
pub fn log_potential<T: Real>(x: Vec2<T>) -> Result<T> {
    Ok(-nonzero(x)?.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    fn b(p: f64) -> BurgersAngle<f64> {
        BurgersAngle::new(p)
    }

    #[test]
    fn edge_examples() {
        assert_eq!(
            edge_potential(Vec2::new(1.0, 0.0), b(0.0), b(0.0))
                .unwrap()
                .abs(),
            0.0
        );
        assert!((edge_potential(Vec2::new(0.0, 1.0), b(0.0), b(0.0)).unwrap() + 1.0).abs() < 1e-15);
        // b_i ⟂ b_j: only the angular term survives; b_i^⊥·e₁ = 0.
        let v = edge_potential(Vec2::new(E, 0.0), b(0.0), b(PI / 2.0)).unwrap();
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn polar_examples() {
        assert!((edge_potential_polar(1.0, 0.0, b(0.0), b(0.0)).unwrap() - 1.0).abs() < 1e-15);
        assert!(
            edge_potential_polar(1.0, PI / 2.0, b(0.0), b(0.0))
                .unwrap()
                .abs()
                < 1e-15
        );
    }

    #[test]
    fn riesz_and_log_examples() {
        assert_eq!(riesz_potential(Vec2::new(4.0, 0.0), 0.5).unwrap(), 0.5);
        assert_eq!(log_potential(Vec2::new(1.0, 0.0)).unwrap(), 0.0);
        assert!(riesz_potential(Vec2::<f64>::zero(), 1.0).is_err());
        assert!(log_potential(Vec2::<f64>::zero()).is_err());
        assert!(edge_potential(Vec2::zero(), b(0.0), b(1.0)).is_err());
    }
}

//! The elastic cross-energy over the lens `B(x,1) ∩ B(y,1)` and the
//! continuous remainder of the edge potential.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::elastic::{
    strain_kernel_polar, stress_kernel_polar, BurgersAngle, LameParameters,
};
use crate::kernels::potentials::edge_potential;
use crate::quadrature::{two_center, Constraint, Estimate, PolarRule};
use crate::tables::PolarTable;
use crate::Vec2d;

/// Quadrature settings for lens integrals.
#[derive(Debug, Clone, Copy)]
pub struct LensQuadrature {
    pub rule: PolarRule,
}

impl Default for LensQuadrature {
    fn default() -> Self {
        Self {
            rule: PolarRule::with_tol(1e-9),
        }
    }
}

impl LensQuadrature {
    pub fn with_tol(abs_tol: f64) -> Self {
        Self {
            rule: PolarRule::with_tol(abs_tol),
        }
    }

    pub fn tol(&self) -> f64 {
        self.rule.angular.abs_tol
    }
}

/// `ℂK^φ(u) : K^ψ(u − d)`.
pub(crate) fn lens_integrand(
    u: Vec2d,
    d: Vec2d,
    phi: f64,
    psi: f64,
    lame: &LameParameters<f64>,
) -> f64 {
    let w = u - d;
    let (r1, r2) = (u.norm(), w.norm());
    if r1 == 0.0 || r2 == 0.0 {
        return 0.0;
    }
    let s = stress_kernel_polar(r1, u.angle(), phi, lame);
    let k = strain_kernel_polar(r2, w.angle(), psi, lame);
    s.frob(&k)
}

/// Lens integral with its quadrature error estimate.
pub fn lens_integral_estimate(
    x: Vec2d,
    y: Vec2d,
    phi: BurgersAngle<f64>,
    psi: BurgersAngle<f64>,
    lame: &LameParameters<f64>,
    quad: &LensQuadrature,
) -> Result<Estimate> {
    let d = y - x;
    let dist = d.norm();
    if !(dist > 0.0) {
        return Err(Error::Domain("lens integral needs x ≠ y".into()));
    }
    if dist >= 2.0 {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }
    let (p, q) = (phi.phi(), psi.phi());
    let common = [
        Constraint::disc(Vec2d::zero(), 1.0),
        Constraint::disc(d, 1.0),
    ];
    Ok(two_center(
        Vec2d::zero(),
        1.0,
        d,
        1.0,
        &common,
        &[],
        &[],
        &[],
        None,
        &quad.rule,
        |u| lens_integrand(u, d, p, q, lame),
    ))
}

/// `∫_{B(x,1)∩B(y,1)} ℂK^φ(z−x) : K^ψ(z−y) dz`.
pub fn lens_integral(
    x: Vec2d,
    y: Vec2d,
    phi: BurgersAngle<f64>,
    psi: BurgersAngle<f64>,
    lame: &LameParameters<f64>,
    quad: &LensQuadrature,
) -> Result<f64> {
    let e = lens_integral_estimate(x, y, phi, psi, lame, quad)?;
    if !(e.error <= quad.tol()) {
        return Err(Error::AccuracyNotMet {
            achieved: e.error,
            requested: quad.tol(),
        });
    }
    Ok(e.value)
}

/// Limit of `V_reg(x; φ, ψ)` as `x → 0`.
pub fn edge_v_reg_at_origin(
    phi: BurgersAngle<f64>,
    psi: BurgersAngle<f64>,
    lame: &LameParameters<f64>,
) -> f64 {
    let c = (phi.phi() - psi.phi()).cos();
    let (l, m) = (lame.lambda, lame.mu);
    -0.5 * c + (l + m) * c / (2.0 * (l + 2.0 * m))
}

/// `V_reg = V − (π(λ+2μ)/(μ(λ+μ)))·lens`, the continuous part of the edge potential.
pub fn edge_v_reg(
    x: Vec2d,
    phi: BurgersAngle<f64>,
    psi: BurgersAngle<f64>,
    lame: &LameParameters<f64>,
    quad: &LensQuadrature,
) -> Result<f64> {
    if x.norm() == 0.0 {
        return Ok(edge_v_reg_at_origin(phi, psi, lame));
    }
    let v = edge_potential(x, phi, psi)?;
    let lens = lens_integral(x, Vec2d::zero(), phi, psi, lame, quad)?;
    Ok(v - lens / lame.prefactor())
}

/// Tabulated `V_reg(d; 0, Δ)` for one canonical `Δ ∈ [0, π]` on `|d| ≤ 2`.
#[derive(Debug, Clone)]
pub struct EdgeRegTable {
    delta: f64,
    table: PolarTable,
}

/// Resolution of [`EdgeRegTable`].
#[derive(Debug, Clone, Copy)]
pub struct EdgeTableSpec {
    pub radial: usize,
    pub angular: usize,
    pub quad_tol: f64,
}

impl Default for EdgeTableSpec {
    fn default() -> Self {
        Self {
            radial: 48,
            angular: 32,
            quad_tol: 1e-8,
        }
    }
}

impl EdgeRegTable {
    pub fn build(delta: f64, lame: &LameParameters<f64>, spec: &EdgeTableSpec) -> Result<Self> {
        let radii = table_radii(spec.radial);
        let phi = BurgersAngle::new(0.0);
        let psi = BurgersAngle::new(delta);
        let quad = LensQuadrature::with_tol(spec.quad_tol);
        let origin = edge_v_reg_at_origin(phi, psi, lame);
        let cells: Vec<(usize, usize)> = (0..spec.angular)
            .flat_map(|j| (0..radii.len()).map(move |i| (j, i)))
            .collect();
        let vals: Vec<Result<f64>> = cells
            .par_iter()
            .map(|&(j, i)| {
                let r = radii[i];
                if i == 0 {
                    return Ok(origin);
                }
                let th = j as f64 * PI / spec.angular as f64;
                let d = Vec2d::unit(th).scale(r);
                if r >= 2.0 {
                    return edge_potential(d, phi, psi);
                }
                let v = edge_potential(d, phi, psi)?;
                let e = lens_integral_estimate(d, Vec2d::zero(), phi, psi, lame, &quad)?;
                Ok(v - e.value / lame.prefactor())
            })
            .collect();
        let mut values = vec![vec![0.0; radii.len()]; spec.angular];
        for (&(j, i), v) in cells.iter().zip(vals) {
            values[j][i] = v?;
        }
        Ok(Self {
            delta,
            table: PolarTable::new(&radii, PI, values, &[1.0]),
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `V_reg(d; 0, Δ)`; exact potential for `|d| ≥ 2`.
    pub fn eval(&self, d: Vec2d) -> f64 {
        let r = d.norm();
        if r >= 2.0 {
            let phi = BurgersAngle::new(0.0);
            return edge_potential(d, phi, BurgersAngle::new(self.delta)).unwrap_or(0.0);
        }
        self.table.eval(r, d.angle())
    }
}

/// Knots on `[0, 2]`, graded towards 0 and clustered about `|d| = 1`, where
/// the lens boundary passes through a singular point and `V_reg` has a kink.
fn table_radii(n: usize) -> Vec<f64> {
    let mut r: Vec<f64> = (0..=n)
        .map(|i| 2.0 * (i as f64 / n as f64).powf(1.5))
        .collect();
    for k in 2..=10 {
        let h = 2f64.powi(-k);
        r.push(1.0 - h);
        r.push(1.0 + h);
    }
    r.retain(|&x| (x - 1.0).abs() > 1e-4);
    r.push(1.0);
    r.sort_by(f64::total_cmp);
    r.dedup_by(|a, b| *a - *b <= 1e-4);
    r
}

/// Canonical `(Δ, rotation)` so that `V_reg(d; φ, ψ) = table_Δ(J_rot d)`.
pub(crate) fn canonical_pair(phi: f64, psi: f64) -> (f64, f64) {
    let delta = (psi - phi).rem_euclid(TAU);
    if delta <= PI {
        (delta, -phi)
    } else {
        // V_reg(e; 0, −Δ') = V_reg(J_Δ' e; 0, Δ') with Δ' = 2π − Δ.
        let dp = TAU - delta;
        (dp, dp - phi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn far_lens_is_zero() {
        let b = BurgersAngle::new(0.0);
        let l = LameParameters::default();
        let v = lens_integral(
            Vec2d::new(0.0, 0.0),
            Vec2d::new(2.5, 0.0),
            b,
            b,
            &l,
            &LensQuadrature::default(),
        )
        .unwrap();
        assert_eq!(v, 0.0);
        assert!(lens_integral(
            Vec2d::zero(),
            Vec2d::zero(),
            b,
            b,
            &l,
            &LensQuadrature::default()
        )
        .is_err());
    }

    #[test]
    fn canonical_pair_rule() {
        let l = LameParameters::default();
        let q = LensQuadrature::with_tol(1e-9);
        let d = Vec2d::new(0.31, -0.22);
        let (phi, psi) = (2.0, 0.5);
        let direct = edge_v_reg(d, BurgersAngle::new(phi), BurgersAngle::new(psi), &l, &q).unwrap();
        let (delta, rot) = canonical_pair(phi, psi);
        let via = edge_v_reg(
            d.rotate(rot),
            BurgersAngle::new(0.0),
            BurgersAngle::new(delta),
            &l,
            &q,
        )
        .unwrap();
        assert!((direct - via).abs() < 1e-7, "{direct} vs {via}");
    }
}

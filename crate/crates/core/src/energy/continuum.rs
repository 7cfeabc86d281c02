//! Continuum energy of piecewise-constant grid densities.

use rustfft::num_complex::Complex64;

use super::cells::CellKernel;
use super::fft::{padded, Fft2};
use super::{EnergyBreakdown, PairContribution};
use crate::error::{Error, Result};
use crate::kernels::KernelFamily;
use crate::measures::GridDensity;
use crate::summation::ExactSum;

/// Quadrature orders of the cell-pair kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContinuumGrid {
    pub far_order: usize,
    pub near_order: usize,
}

impl Default for ContinuumGrid {
    fn default() -> Self {
        Self { far_order: 3, near_order: 10 }
    }
}

/// Coarsest cell size at which the profile kinks on the unit circle are
/// resolved.
pub(crate) const MAX_CELL: f64 = 0.25;

/// Transformed cell-pair kernels `A_reg^{st}`, `A_conv^{st}` for all ordered
/// species pairs on an `nx × ny` grid.
pub(crate) struct CellOperator {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub species: usize,
    pub fft: Fft2,
    pub reg_hat: Vec<Vec<Complex64>>,
    pub conv_hat: Vec<Vec<Complex64>>,
}

impl CellOperator {
    pub fn new(base: &KernelFamily, h: f64, nx: usize, ny: usize, grid: ContinuumGrid) -> Result<Self> {
        if !(h > 0.0) || h > MAX_CELL {
            return Err(Error::Resolution { h, required: MAX_CELL });
        }
        base.prepare();
        let n = nx.max(ny);
        let m = n - 1;
        let reach = 2.0 * base.profile_support();
        let m_conv = m.min((reach / h).ceil() as usize + 1);
        let fft = Fft2::new(padded(2 * n - 1));
        let ns = base.species_count();
        let mut reg_hat = vec![Vec::new(); ns * ns];
        let mut conv_hat = vec![Vec::new(); ns * ns];
        for s in 0..ns {
            for t in s..ns {
                let reg = CellKernel::build_with(h, m, grid.far_order, grid.near_order, |x| {
                    base.v_reg(s, t, x)
                });
                let conv = CellKernel::build_with(h, m_conv, grid.far_order, grid.near_order, |x| {
                    let r = x.norm();
                    if r == 0.0 || r >= reach {
                        0.0
                    } else {
                        base.conv(s, t, x).unwrap_or(0.0)
                    }
                });
                reg_hat[s * ns + t] = fft.transform_offsets(&reg.values, m);
                conv_hat[s * ns + t] = fft.transform_offsets(&conv.values, m_conv);
                if t != s {
                    // A^{ts}(d) = A^{st}(−d).
                    let rev = |v: &[f64]| v.iter().rev().copied().collect::<Vec<_>>();
                    reg_hat[t * ns + s] = fft.transform_offsets(&rev(&reg.values), m);
                    conv_hat[t * ns + s] = fft.transform_offsets(&rev(&conv.values), m_conv);
                }
            }
        }
        Ok(Self { nx, ny, h, species: ns, fft, reg_hat, conv_hat })
    }

    pub fn transform(&self, vals: &[f64]) -> Vec<Complex64> {
        self.fft.transform_real(vals, self.nx, self.ny)
    }

    /// Real part of the inverse transform restricted to the grid.
    pub fn restrict(&self, mut buf: Vec<Complex64>) -> Vec<f64> {
        self.fft.inverse(&mut buf);
        let p = self.fft.p;
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for j in 0..self.ny {
            out.extend(buf[j * p..j * p + self.nx].iter().map(|c| c.re));
        }
        out
    }

    /// `h⁴ Σ_{ij} a_i A(i − j) b_j` with `b̂ ⊙ Â` given.
    pub fn pair_form(&self, a: &[f64], prod: Vec<Complex64>) -> f64 {
        let conv = self.restrict(prod);
        let h4 = self.h.powi(4);
        let mut acc = ExactSum::new();
        for (x, y) in a.iter().zip(&conv) {
            acc.add(x * y);
        }
        h4 * acc.value()
    }

    /// `(A μ)^s = h² Σ_t A^{st} ⊛ μ^t`, the gradient of half the quadratic form
    /// divided by the cell area.
    pub fn apply(&self, mu_hat: &[Vec<Complex64>], combined: &[Vec<Complex64>]) -> Vec<Vec<f64>> {
        let ns = self.species;
        let h2 = self.h * self.h;
        (0..ns)
            .map(|s| {
                let mut acc = vec![Complex64::new(0.0, 0.0); mu_hat[0].len()];
                for t in 0..ns {
                    let k = &combined[s * ns + t];
                    for ((a, m), kk) in acc.iter_mut().zip(&mu_hat[t]).zip(k) {
                        *a += m * kk;
                    }
                }
                self.restrict(acc).into_iter().map(|v| v * h2).collect()
            })
            .collect()
    }

    pub fn combined(&self) -> Vec<Vec<Complex64>> {
        self.reg_hat
            .iter()
            .zip(&self.conv_hat)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect()
    }

    /// Energy breakdown of per-species cell densities.
    pub fn breakdown(&self, mu: &[Vec<f64>]) -> EnergyBreakdown {
        let ns = self.species;
        let hats: Vec<_> = mu.iter().map(|v| self.transform(v)).collect();
        let mut g = ExactSum::new();
        let mut f = ExactSum::new();
        let mut pairs = Vec::with_capacity(ns * ns);
        for s in 0..ns {
            for t in 0..ns {
                let prod = |k: &[Complex64]| hats[t].iter().zip(k).map(|(a, b)| a * b).collect::<Vec<_>>();
                let gst = self.pair_form(&mu[s], prod(&self.reg_hat[s * ns + t]));
                let fst = self.pair_form(&mu[s], prod(&self.conv_hat[s * ns + t]));
                g.add(gst);
                f.add(fst);
                pairs.push(PairContribution { s, t, value: gst + fst });
            }
        }
        let (g, f) = (g.value(), f.value());
        EnergyBreakdown {
            total: g + f,
            g,
            f_pairwise: f,
            f_grid: None,
            gamma: 0.0,
            pairs,
            warnings: Vec::new(),
        }
    }
}

/// `E(μ) = Σ_{s,t} ∬ V^{st}(x − y) dμ^s(x) dμ^t(y)` for a piecewise-constant
/// density, split into the `V_reg` part `G` and the convolution-square part
/// `F`. Cell pairs are integrated exactly up to quadrature, so `F ≥ 0`.
pub fn continuum_energy(mu: &GridDensity, base: &KernelFamily, grid: ContinuumGrid) -> Result<EnergyBreakdown> {
    if mu.species_count() != base.species_count() {
        return Err(Error::Domain(format!(
            "density has {} species, kernel has {}",
            mu.species_count(),
            base.species_count()
        )));
    }
    let op = CellOperator::new(base, mu.h(), mu.nx(), mu.ny(), grid)?;
    let vals: Vec<Vec<f64>> = (0..mu.species_count()).map(|s| mu.values(s).to_vec()).collect();
    Ok(op.breakdown(&vals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::BoundingBox;

    #[test]
    fn coarse_grid_is_rejected() {
        let base = KernelFamily::log(&[1.0]).unwrap();
        let mu = GridDensity::truncated_gaussian(BoundingBox::square(1.0), 0.5, 0.4).unwrap();
        assert!(matches!(
            continuum_energy(&mu, &base, ContinuumGrid::default()),
            Err(Error::Resolution { .. })
        ));
    }

    #[test]
    fn single_cell_matches_cell_average() {
        // One cell of mass 1: E = A(0) for the potential.
        let base = KernelFamily::log(&[1.0]).unwrap();
        let h = 0.25;
        let mu = GridDensity::new(BoundingBox::new(0.0, 0.0, h, h), h, vec![vec![1.0 / (h * h)]]).unwrap();
        let e = continuum_energy(&mu, &base, ContinuumGrid::default()).unwrap();
        let direct = CellKernel::build(h, 0, |x| -x.norm().ln());
        assert!((e.total - direct.at(0, 0)).abs() < 1e-9, "{} vs {}", e.total, direct.at(0, 0));
        assert!(e.f_pairwise >= 0.0);
        assert_eq!(e.gamma, 0.0);
    }

    #[test]
    fn brute_force_pair_sum_agrees() {
        let base = KernelFamily::log(&[1.0, -0.5]).unwrap();
        let h = 0.125;
        let bbox = BoundingBox::new(-0.25, -0.25, 0.25, 0.125);
        let (nx, ny) = (4, 3);
        let a: Vec<f64> = (0..nx * ny).map(|k| 1.0 + (k % 5) as f64).collect();
        let b: Vec<f64> = (0..nx * ny).map(|k| 0.5 + (k % 3) as f64).collect();
        let tot: f64 = (a.iter().sum::<f64>() + b.iter().sum::<f64>()) * h * h;
        let scale = |v: &[f64]| v.iter().map(|x| x / tot).collect::<Vec<_>>();
        let mu = GridDensity::new(bbox, h, vec![scale(&a), scale(&b)]).unwrap();
        let e = continuum_energy(&mu, &base, ContinuumGrid::default()).unwrap();
        let m = nx.max(ny) - 1;
        let mut brute = 0.0;
        for s in 0..2 {
            for t in 0..2 {
                let k = CellKernel::build(h, m, |x| {
                    if x.norm() == 0.0 {
                        0.0
                    } else {
                        base.potential(s, t, x).unwrap()
                    }
                });
                for i in 0..nx * ny {
                    for j in 0..nx * ny {
                        let di = (i % nx) as isize - (j % nx) as isize;
                        let dj = (i / nx) as isize - (j / nx) as isize;
                        brute += mu.values(s)[i] * mu.values(t)[j] * h.powi(4) * k.at(di, dj);
                    }
                }
            }
        }
        assert!((e.total - brute).abs() < 1e-8 * (1.0 + brute.abs()), "{} vs {brute}", e.total);
        let p01 = e.pair(0, 1).unwrap();
        let p10 = e.pair(1, 0).unwrap();
        assert!((p01 - p10).abs() < 1e-12);
    }
}

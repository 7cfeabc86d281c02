//! Fourier transforms of the convolution part `V − V_reg`.
//!
//! `M^{st}(ω) = ∫ (V^{st} − V_reg^{st})(x) e^{−iω·x} dx` equals
//! `Σ_k conj(Ŵ_k^s(ω)) Ŵ_k^t(ω)`, a Gram matrix, hence positive
//! semi-definite. Both sides are computed by polar quadrature and compared.

use nalgebra::{DMatrix, SymmetricEigen};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{FamilyTag, KernelFamily};
use crate::quadrature::{Constraint, PolarRegion, PolarRule};
use crate::Vec2d;

const TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierSample {
    pub omega: [f64; 2],
    /// `M(ω)` row-major, real and imaginary parts.
    pub matrix_re: Vec<f64>,
    pub matrix_im: Vec<f64>,
    pub min_eigenvalue: f64,
    /// Minimum eigenvalue of the Gram matrix `Ŵ(ω)* Ŵ(ω)`.
    pub gram_min_eigenvalue: f64,
    /// `min_eigenvalue ≥ −(1e−8·max(1, ‖M‖) + gram_residual)`: PSD up to the
    /// measured tabulation error of `V − V_reg`.
    pub psd: bool,
    /// `max |M(ω) − Ŵ(ω)* Ŵ(ω)|`.
    pub gram_residual: f64,
    /// `max |M(ω) − M(ω)*|`.
    pub hermitian_residual: f64,
    /// Minimum eigenvalue of the transform of the full `V` truncated to a
    /// disc, when requested. Negative values are expected.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_min_eigenvalue: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierDiagnostic {
    pub species: usize,
    pub samples: Vec<FourierSample>,
    /// Truncation radius of the full transform, when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl FourierDiagnostic {
    pub fn all_psd(&self) -> bool {
        self.samples.iter().all(|s| s.psd)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.samples.iter().map(|s| s.min_eigenvalue).fold(f64::INFINITY, f64::min)
    }

    pub fn gram_min_eigenvalue(&self) -> f64 {
        self.samples.iter().map(|s| s.gram_min_eigenvalue).fold(f64::INFINITY, f64::min)
    }

    pub fn max_gram_residual(&self) -> f64 {
        self.samples.iter().map(|s| s.gram_residual).fold(0.0, f64::max)
    }
}

fn rule_for(omega: Vec2d) -> PolarRule {
    let mut r = PolarRule::with_tol(TOL);
    r.radial_nodes = (16.0 + 4.0 * omega.norm()).ceil().min(96.0) as usize;
    r
}

fn disc(singularity: f64, radius: f64, kinks: &[f64]) -> PolarRegion {
    let mut reg = PolarRegion::new(Vec2d::zero(), singularity)
        .constrain(Constraint::disc(Vec2d::zero(), radius))
        .scale(1e-3);
    for &k in kinks {
        if k < radius {
            reg = reg.kink(Vec2d::zero(), k);
        }
    }
    reg
}

fn transform(region: &PolarRegion, rule: &PolarRule, omega: Vec2d, f: impl Fn(Vec2d) -> f64) -> Complex64 {
    let re = region.integrate(rule, |x| f(x) * omega.dot(x).cos()).value;
    let im = -region.integrate(rule, |x| f(x) * omega.dot(x).sin()).value;
    Complex64::new(re, im)
}

/// Minimum eigenvalue of a Hermitian matrix through its real symmetric
/// embedding `[[Re, −Im], [Im, Re]]`.
fn hermitian_min_eigenvalue(m: &[Complex64], n: usize) -> f64 {
    let e = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let c = m[(i % n) * n + j % n];
        let c = 0.5 * (c + m[(j % n) * n + i % n].conj());
        match (i < n, j < n) {
            (true, true) | (false, false) => c.re,
            (true, false) => -c.im,
            (false, true) => c.im,
        }
    });
    SymmetricEigen::new(e).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Samples `M(ω)` at each frequency. With `full_radius`, also the transform
/// of the full potential over `B(0, full_radius)`, reported but not judged.
pub fn fourier_psd_check(
    base: &KernelFamily,
    omegas: &[Vec2d],
    full_radius: Option<f64>,
) -> Result<FourierDiagnostic> {
    if omegas.iter().any(|w| !w.is_finite()) {
        return Err(Error::Domain("frequencies must be finite".into()));
    }
    base.prepare();
    let ns = base.species_count();
    let kc = base.component_count();
    let support = base.profile_support();
    let conv_sing = match base.tag() {
        FamilyTag::Riesz => base.riesz_exponent().unwrap(),
        _ => 0.0,
    };
    let prof_kinks = base.profile_kinks();
    let conv_kinks: Vec<f64> = (1..=(2.0 * support) as usize).map(|k| k as f64).collect();
    let conv_region = disc(conv_sing, 2.0 * support, &conv_kinks);
    let prof_region = disc(base.profile_singularity(), support, &prof_kinks);
    let mut warnings = Vec::new();
    if let Some(r) = full_radius {
        warnings.push(format!(
            "full transform truncated to |x| <= {r}; the potential does not decay there"
        ));
    }

    let mut samples = Vec::with_capacity(omegas.len());
    for &omega in omegas {
        let rule = rule_for(omega);
        let mut m = vec![Complex64::new(0.0, 0.0); ns * ns];
        for s in 0..ns {
            for t in 0..ns {
                m[s * ns + t] = transform(&conv_region, &rule, omega, |x| {
                    if x.norm() == 0.0 {
                        0.0
                    } else {
                        base.conv(s, t, x).unwrap_or(0.0)
                    }
                });
            }
        }
        let w_hat: Vec<Vec<Complex64>> = (0..ns)
            .map(|s| {
                (0..kc)
                    .map(|k| transform(&prof_region, &rule, omega, |x| base.profile(k, s, x)))
                    .collect()
            })
            .collect();
        let mut gram = vec![Complex64::new(0.0, 0.0); ns * ns];
        let mut gram_residual = 0.0f64;
        let mut hermitian_residual = 0.0f64;
        for s in 0..ns {
            for t in 0..ns {
                let g: Complex64 = (0..kc).map(|k| w_hat[s][k].conj() * w_hat[t][k]).sum();
                gram[s * ns + t] = g;
                gram_residual = gram_residual.max((m[s * ns + t] - g).norm());
                hermitian_residual = hermitian_residual.max((m[s * ns + t] - m[t * ns + s].conj()).norm());
            }
        }
        let min_eigenvalue = hermitian_min_eigenvalue(&m, ns);
        let gram_min_eigenvalue = hermitian_min_eigenvalue(&gram, ns);
        let full_min_eigenvalue = full_radius.map(|r| {
            let region = disc(0.0, r, &conv_kinks);
            let mut full = vec![Complex64::new(0.0, 0.0); ns * ns];
            for s in 0..ns {
                for t in 0..ns {
                    full[s * ns + t] = transform(&region, &rule, omega, |x| {
                        if x.norm() == 0.0 {
                            0.0
                        } else {
                            base.potential(s, t, x).unwrap_or(0.0)
                        }
                    });
                }
            }
            hermitian_min_eigenvalue(&full, ns)
        });
        let scale = m.iter().map(|c| c.norm()).fold(0.0, f64::max);
        samples.push(FourierSample {
            omega: [omega.x, omega.y],
            matrix_re: m.iter().map(|c| c.re).collect(),
            matrix_im: m.iter().map(|c| c.im).collect(),
            min_eigenvalue,
            gram_min_eigenvalue,
            psd: min_eigenvalue >= -(1e-8 * scale.max(1.0) + gram_residual),
            gram_residual,
            hermitian_residual,
            full_min_eigenvalue,
        });
    }
    Ok(FourierDiagnostic { species: ns, samples, full_radius, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermitian_embedding_eigenvalues() {
        // [[2, i], [−i, 2]] has eigenvalues 1 and 3.
        let m = [
            Complex64::new(2.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(2.0, 0.0),
        ];
        assert!((hermitian_min_eigenvalue(&m, 2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_single_species_is_gram() {
        let base = KernelFamily::log(&[1.0]).unwrap();
        let d = fourier_psd_check(&base, &[Vec2d::new(0.0, 0.0), Vec2d::new(2.0, 1.0)], None).unwrap();
        for s in &d.samples {
            assert!(s.psd);
            assert!(s.gram_min_eigenvalue >= -1e-12);
            assert!(s.gram_residual < 1e-6, "{}", s.gram_residual);
            assert!(s.matrix_im[0].abs() < 1e-8);
        }
    }
}

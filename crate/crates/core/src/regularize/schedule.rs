//! Scale schedules `n ↦ δ_n`, self-energies and the `log(1/δ_n) ≪ n` regime.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelFamily;
use crate::measures::Configuration;
use crate::regularize::kernel::{mollified_self_energy, RegularizedKernel};

/// Rule `n ↦ δ_n`. Evaluated in log space so that `exp(−n)` stays usable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum DeltaSchedule {
    /// `δ_n = c n^{−β}`.
    Power { c: f64, beta: f64 },
    /// `δ_n = exp(−c n^α)`.
    Exponential { c: f64, alpha: f64 },
    /// Listed `(n, δ_n)`; log-linear in between, constant outside.
    Table { points: Vec<(u64, f64)> },
}

impl DeltaSchedule {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Power { c, beta } if *c > 0.0 && *beta > 0.0 => Ok(()),
            Self::Exponential { c, alpha } if *c > 0.0 && *alpha > 0.0 && *alpha <= 1.0 => Ok(()),
            Self::Table { points } => {
                let ok = !points.is_empty()
                    && points.iter().all(|p| p.1 > 0.0 && p.0 > 0)
                    && points
                        .windows(2)
                        .all(|w| w[0].0 < w[1].0 && w[0].1 >= w[1].1);
                if ok {
                    Ok(())
                } else {
                    Err(Error::Domain(
                        "schedule table must be increasing in n and non-increasing in delta".into(),
                    ))
                }
            }
            other => Err(Error::Domain(format!("invalid schedule {other:?}"))),
        }
    }

    /// `ln δ_n`.
    pub fn ln_delta(&self, n: u64) -> f64 {
        let nf = n as f64;
        match self {
            Self::Power { c, beta } => c.ln() - beta * nf.ln(),
            Self::Exponential { c, alpha } => -c * nf.powf(*alpha),
            Self::Table { points } => {
                let first = points[0];
                let last = points[points.len() - 1];
                if n <= first.0 {
                    return first.1.ln();
                }
                if n >= last.0 {
                    return last.1.ln();
                }
                let i = points.partition_point(|p| p.0 <= n);
                let (a, b) = (points[i - 1], points[i]);
                let u = (nf.ln() - (a.0 as f64).ln()) / ((b.0 as f64).ln() - (a.0 as f64).ln());
                a.1.ln() + u * (b.1.ln() - a.1.ln())
            }
        }
    }

    pub fn delta(&self, n: u64) -> f64 {
        self.ln_delta(n).exp()
    }
}

/// `(1/n²) Σ_s n_s |V_δ^{ss}(0)|` for species counts `n_s`.
pub fn gamma_from_counts(counts: &[usize], self_energies: &[f64]) -> Result<f64> {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return Err(Error::Domain("gamma_n needs at least one particle".into()));
    }
    let mut g = 0.0;
    for (&c, &v) in counts.iter().zip(self_energies) {
        if !v.is_finite() {
            return Err(Error::Domain("self-energy is not finite".into()));
        }
        g += c as f64 * v.abs();
    }
    Ok(g / (n as f64 * n as f64))
}

/// `γ_n` of a configuration under `reg`.
pub fn gamma_n(config: &Configuration, reg: &RegularizedKernel) -> Result<f64> {
    let counts = config.species_counts();
    let e: Vec<f64> = (0..counts.len())
        .map(|s| reg.self_energy(s))
        .collect::<Result<_>>()?;
    gamma_from_counts(&counts, &e)
}

/// `γ_n` for the mollified family at `δ = exp(ln_delta)` from species counts.
pub fn mollified_gamma(base: &KernelFamily, counts: &[usize], ln_delta: f64) -> Result<f64> {
    let e: Vec<f64> = (0..counts.len())
        .map(|s| mollified_self_energy(base, s, ln_delta))
        .collect::<Result<_>>()?;
    gamma_from_counts(counts, &e)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeRow {
    pub n: u64,
    pub delta: f64,
    pub ln_inv_delta: f64,
    /// `log(1/δ_n)/n`.
    pub ratio: f64,
    /// `γ_n` of a single species of unit log charges under the mollified family.
    pub gamma_proxy: f64,
    pub inside: bool,
}

/// Default threshold on `log(1/δ_n)/n`.
pub const REGIME_THRESHOLD: f64 = 0.1;

/// Flags each `n` as inside the regime when `log(1/δ_n)/n` is below
/// `threshold` and decreasing (compared with `2n`).
pub fn regime_diagnostic(
    schedule: &DeltaSchedule,
    n_list: &[u64],
    threshold: f64,
) -> Result<Vec<RegimeRow>> {
    schedule.validate()?;
    let unit = KernelFamily::log(&[1.0])?;
    n_list
        .iter()
        .map(|&n| {
            if n == 0 {
                return Err(Error::Domain("n must be positive".into()));
            }
            let ln_d = schedule.ln_delta(n);
            let ratio = -ln_d / n as f64;
            let next = -schedule.ln_delta(2 * n) / (2 * n) as f64;
            let gamma_proxy = mollified_gamma(&unit, &[n as usize], ln_d)?;
            Ok(RegimeRow {
                n,
                delta: ln_d.exp(),
                ln_inv_delta: -ln_d,
                ratio,
                gamma_proxy,
                inside: ratio <= threshold && next < ratio,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedules() {
        let p = DeltaSchedule::Power { c: 1.0, beta: 0.5 };
        assert!((p.delta(100) - 0.1).abs() < 1e-15);
        let e = DeltaSchedule::Exponential { c: 1.0, alpha: 1.0 };
        assert_eq!(e.ln_delta(100_000), -100_000.0);
        assert_eq!(e.delta(100_000), 0.0);
        let t = DeltaSchedule::Table {
            points: vec![(10, 0.1), (1000, 0.001)],
        };
        assert!((t.delta(100) - 0.01).abs() < 1e-15);
        assert!(DeltaSchedule::Table {
            points: vec![(10, 0.1), (5, 0.01)]
        }
        .validate()
        .is_err());
    }

    #[test]
    fn gamma_arithmetic() {
        assert!((gamma_from_counts(&[100], &[4.6052]).unwrap() - 0.046052).abs() < 1e-15);
        assert!(gamma_from_counts(&[0, 0], &[1.0, 1.0]).is_err());
    }
}

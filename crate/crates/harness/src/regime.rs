//! γ_n sweeps over δ_n schedules.

use multislip::kernels::KernelFamily;
use multislip::regularize::{mollified_gamma, regime_diagnostic, DeltaSchedule, RegFamily, RegularizerSpec};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{AtStep, HarnessError, Result};
use crate::output::PlotPoint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeTableRow {
    pub schedule: String,
    pub n: u64,
    pub delta: f64,
    pub ln_inv_delta: f64,
    pub ratio: f64,
    pub gamma: f64,
    pub inside: bool,
    pub config_hash: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleSummary {
    pub schedule: String,
    /// Least-squares slope of `log γ_n` against `log n`.
    pub slope: f64,
    pub min_gamma: f64,
    pub max_gamma: f64,
    /// `n` flagged outside the `log(1/δ_n) ≪ n` regime.
    pub outside: Vec<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegimeReport {
    pub config_hash: String,
    pub seed: u64,
    pub schedules: Vec<ScheduleSummary>,
    #[serde(skip)]
    pub rows: Vec<RegimeTableRow>,
}

pub fn schedule_label(s: &DeltaSchedule) -> String {
    match s {
        DeltaSchedule::Power { c, beta } => format!("power(c={c},beta={beta})"),
        DeltaSchedule::Exponential { c, alpha } => format!("exponential(c={c},alpha={alpha})"),
        DeltaSchedule::Table { points } => format!("table({} points)", points.len()),
    }
}

/// `n = 10^{lo}, …, 10^{hi}` with `per_decade` geometric steps per decade.
pub fn log_ladder(lo: f64, hi: f64, per_decade: usize) -> Vec<u64> {
    let steps = ((hi - lo) * per_decade as f64).round() as usize;
    let mut out: Vec<u64> = (0..=steps)
        .map(|k| 10f64.powf(lo + k as f64 / per_decade as f64).round() as u64)
        .collect();
    out.dedup();
    out
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Equal species counts summing to `n`.
fn counts(n: u64, species: usize) -> Vec<usize> {
    let n = n as usize;
    (0..species).map(|s| n / species + usize::from(s < n % species)).collect()
}

fn gamma(base: &KernelFamily, spec: &RegularizerSpec, n: u64, ln_delta: f64) -> multislip::Result<f64> {
    let c = counts(n, base.species_count());
    if spec.reg_family == RegFamily::Mollified {
        return mollified_gamma(base, &c, ln_delta);
    }
    let reg = spec.build(base, ln_delta.exp())?;
    let e: Vec<f64> = (0..c.len()).map(|s| reg.self_energy(s)).collect::<multislip::Result<_>>()?;
    multislip::regularize::gamma_from_counts(&c, &e)
}

/// γ_n of the configured kernel under the first regularizer for every
/// configured schedule. Mollified self-energies are evaluated from `ln δ_n`,
/// so schedules like `exp(−n)` stay finite.
pub fn run_gamma_regime(cfg: &ExperimentConfig) -> Result<RegimeReport> {
    let base = cfg.kernel.build()?;
    let spec = cfg.regularizers[0];
    let (lo, hi) = cfg.regime.log10_range;
    if !(hi >= lo) || cfg.regime.per_decade == 0 {
        return Err(HarnessError::Config("regime range must be non-empty".into()));
    }
    let ns = log_ladder(lo, hi, cfg.regime.per_decade);
    let hash = cfg.hash();
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for sched in &cfg.regime.schedules {
        let label = schedule_label(sched);
        let diag = regime_diagnostic(sched, &ns, cfg.regime.threshold)?;
        let mut gammas = Vec::with_capacity(ns.len());
        for d in &diag {
            let g = gamma(&base, &spec, d.n, sched.ln_delta(d.n)).at_step(d.n)?;
            gammas.push(g);
            rows.push(RegimeTableRow {
                schedule: label.clone(),
                n: d.n,
                delta: d.delta,
                ln_inv_delta: d.ln_inv_delta,
                ratio: d.ratio,
                gamma: g,
                inside: d.inside,
                config_hash: hash.clone(),
            });
        }
        let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
        summaries.push(ScheduleSummary {
            schedule: label,
            slope: if ns.len() > 1 { log_log_slope(&xs, &gammas) } else { f64::NAN },
            min_gamma: gammas.iter().copied().fold(f64::INFINITY, f64::min),
            max_gamma: gammas.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            outside: diag.iter().filter(|d| !d.inside).map(|d| d.n).collect(),
        });
    }
    Ok(RegimeReport { config_hash: hash, seed: cfg.seed, schedules: summaries, rows })
}

pub fn regime_plot(rows: &[RegimeTableRow]) -> Vec<PlotPoint> {
    rows.iter()
        .flat_map(|r| {
            [("gamma", r.gamma), ("ratio", r.ratio)].map(|(name, v)| PlotPoint {
                experiment: "gamma_regime".into(),
                n: r.n,
                series: format!("{}/{name}", r.schedule),
                value: v,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_and_slope() {
        assert_eq!(log_ladder(2.0, 3.0, 2), vec![100, 316, 1000]);
        let x = [1.0, 10.0, 100.0];
        let y = [3.0, 0.3, 0.03];
        assert!((log_log_slope(&x, &y) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn counts_sum_to_n() {
        assert_eq!(counts(7, 2), vec![4, 3]);
        assert_eq!(counts(7, 1), vec![7]);
    }
}

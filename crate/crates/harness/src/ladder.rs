//! Convergence ladders and regularizer comparisons.

use std::time::Instant;

use multislip::energy::{continuum_energy, energy_direct, energy_split, ContinuumGrid, EnergyBreakdown, SplitGrid};
use multislip::kernels::KernelFamily;
use multislip::measures::{discretize, Configuration, GridDensity, SpeciesSet};
use multislip::regularize::{regime_diagnostic, RegFamily, RegularizerSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cache::Cache;
use crate::config::ExperimentConfig;
use crate::error::{AtStep, Result};
use crate::output::{ResultRow, TimingRow};

/// Monotonicity slack: an error may grow by this factor between ladder steps.
pub const JITTER: f64 = 0.10;

pub fn series_name(spec: &RegularizerSpec) -> String {
    let fam = match spec.reg_family {
        RegFamily::Mollified => "mollified",
        RegFamily::CoreCutoff => "core_cutoff",
        RegFamily::FromBelow => "from_below",
    };
    match spec.variant {
        Some(v) => format!("{fam}_{}", serde_json::to_value(v).unwrap().as_str().unwrap_or("variant")),
        None => fam.to_string(),
    }
}

/// `true` when every error is at most `(1 + JITTER)` times its predecessor.
pub fn non_increasing_within_jitter(errors: &[f64]) -> bool {
    errors.windows(2).all(|w| w[1] <= (1.0 + JITTER) * w[0])
}

/// Continuum reference `E(μ)` at the configured reference grid, cached by
/// (kernel, density, grid).
pub fn reference_energy(cfg: &ExperimentConfig, base: &KernelFamily, cache: &Cache) -> Result<EnergyBreakdown> {
    let key = Cache::key(&[
        &serde_json::to_string(&base.descriptor())?,
        &serde_json::to_string(&cfg.density)?,
        &serde_json::to_string(&cfg.bbox)?,
        &format!("{:e}", cfg.grid.reference_h),
    ]);
    let mu = cfg.density.sample(cfg.bbox, cfg.grid.reference_h, base.species_count())?;
    cache.get_or_compute(&key, || continuum_energy(&mu, base, ContinuumGrid::default()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepResult {
    pub n: u64,
    pub delta: f64,
    pub inside_regime: bool,
    /// Per regularizer, in configuration order.
    pub direct: Vec<EnergyBreakdown>,
    pub split: Vec<Option<EnergyBreakdown>>,
    /// Wall times go to `timings.csv` only, so reports stay reproducible.
    #[serde(skip)]
    pub seconds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub final_spread: f64,
    pub final_error: f64,
    /// Final `|E_n − E|` per series.
    pub family_errors: Vec<f64>,
    pub spread_decreasing: bool,
    pub within_twice_error: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LadderReport {
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub reference: f64,
    pub series: Vec<String>,
    pub steps: Vec<StepResult>,
    /// Relative errors per series along the ladder.
    pub rel_errors: Vec<Vec<f64>>,
    pub non_increasing: Vec<bool>,
    /// Cross-family spread `max − min` of the totals per step.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub spreads: Vec<f64>,
    pub outside_regime: Vec<u64>,
    #[serde(skip)]
    pub rows: Vec<(String, Vec<ResultRow>)>,
    #[serde(skip)]
    pub timings: Vec<TimingRow>,
}

impl LadderReport {
    pub fn final_error(&self, series: usize) -> f64 {
        *self.rel_errors[series].last().unwrap()
    }

    pub fn final_spread(&self) -> Option<f64> {
        self.spreads.last().copied()
    }

    /// Cross-family comparison against the final discretization error
    /// `max_family |E_n − E|`.
    pub fn comparison(&self) -> Option<Comparison> {
        if self.spreads.is_empty() {
            return None;
        }
        let final_spread = *self.spreads.last().unwrap();
        let errors: Vec<f64> = (0..self.series.len()).map(|k| self.final_error(k) * self.reference.abs()).collect();
        let final_error = errors.iter().copied().fold(0.0, f64::max);
        Some(Comparison {
            final_spread,
            final_error,
            family_errors: errors,
            spread_decreasing: non_increasing_within_jitter(&self.spreads),
            within_twice_error: final_spread <= 2.0 * final_error,
        })
    }

    pub fn all_rows(&self) -> Vec<ResultRow> {
        self.rows.iter().flat_map(|(_, r)| r.iter().cloned()).collect()
    }
}

struct Setup {
    base: KernelFamily,
    species: SpeciesSet,
    density: GridDensity,
}

fn setup(cfg: &ExperimentConfig) -> Result<Setup> {
    let base = cfg.kernel.build()?;
    let species = cfg.kernel.species_set(&base)?;
    let density = cfg.density.sample(cfg.bbox, cfg.density.h, base.species_count())?;
    Ok(Setup { base, species, density })
}

fn run_step(cfg: &ExperimentConfig, s: &Setup, n: u64) -> Result<StepResult> {
    let delta = cfg.schedule.delta(n);
    let inside = regime_diagnostic(&cfg.schedule, &[n], cfg.regime.threshold).at_step(n)?[0].inside;
    let config: Configuration = discretize(&s.density, &s.species, n as usize).at_step(n)?;
    let mut direct = Vec::new();
    let mut split = Vec::new();
    let mut seconds = Vec::new();
    for spec in &cfg.regularizers {
        let t = Instant::now();
        let reg = spec.build(&s.base, delta).at_step(n)?;
        if cfg.grid.split {
            let grid = SplitGrid { h: cfg.grid.split_h, rasterize: cfg.grid.rasterize };
            let e = energy_split(&config, &reg, &grid).at_step(n)?;
            direct.push(energy_direct(&config, &reg).at_step(n)?);
            split.push(Some(e));
        } else {
            direct.push(energy_direct(&config, &reg).at_step(n)?);
            split.push(None);
        }
        seconds.push(t.elapsed().as_secs_f64());
    }
    Ok(StepResult { n, delta, inside_regime: inside, direct, split, seconds })
}

/// Runs the ladder for every configured regularizer on shared discretized
/// configurations. Steps run in parallel; rows are merged in ladder order.
pub fn run_ladder(cfg: &ExperimentConfig, cache: &Cache) -> Result<LadderReport> {
    cfg.validate()?;
    let s = setup(cfg)?;
    let reference = reference_energy(cfg, &s.base, cache)?.total;
    let steps: Vec<StepResult> = cfg
        .n_ladder
        .par_iter()
        .map(|&n| run_step(cfg, &s, n))
        .collect::<Result<_>>()?;
    let hash = cfg.hash();
    let experiment = cfg.kind.id().to_string();
    let series: Vec<String> = cfg.regularizers.iter().map(series_name).collect();
    let rel = |e: f64| (e - reference).abs() / reference.abs();
    let rel_errors: Vec<Vec<f64>> = (0..series.len())
        .map(|k| steps.iter().map(|st| rel(st.direct[k].total)).collect())
        .collect();
    let non_increasing: Vec<bool> = rel_errors.iter().map(|e| non_increasing_within_jitter(e)).collect();
    let spreads: Vec<f64> = if series.len() > 1 {
        steps
            .iter()
            .map(|st| {
                let (lo, hi) = st
                    .direct
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), e| (a.min(e.total), b.max(e.total)));
                hi - lo
            })
            .collect()
    } else {
        Vec::new()
    };

    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for (i, st) in steps.iter().enumerate() {
        let mut step_rows = Vec::new();
        for (k, name) in series.iter().enumerate() {
            let mut flags = Vec::new();
            if !st.inside_regime {
                flags.push("outside_regime");
            }
            if i > 0 && rel_errors[k][i] > (1.0 + JITTER) * rel_errors[k][i - 1] {
                flags.push("error_increased");
            }
            let e = &st.direct[k];
            step_rows.push(ResultRow {
                experiment: experiment.clone(),
                series: name.clone(),
                n: st.n,
                delta: st.delta,
                total: e.total,
                g: e.g,
                f: e.f_pairwise,
                gamma: e.gamma,
                reference,
                rel_error: rel_errors[k][i],
                flags: flags.join(";"),
                config_hash: hash.clone(),
            });
            if let Some(sp) = &st.split[k] {
                let total = sp.g + sp.f_pairwise;
                let mut sflags = flags.clone();
                if sp.f_discrepancy().is_some_and(|d| d > multislip::energy::F_CROSS_CHECK) {
                    sflags.push("grid_f_discrepancy");
                }
                step_rows.push(ResultRow {
                    experiment: experiment.clone(),
                    series: format!("{name}/split"),
                    n: st.n,
                    delta: st.delta,
                    total,
                    g: sp.g,
                    f: sp.f_grid.unwrap_or(sp.f_pairwise),
                    gamma: sp.gamma,
                    reference,
                    rel_error: rel(total),
                    flags: sflags.join(";"),
                    config_hash: hash.clone(),
                });
            }
            timings.push(TimingRow {
                experiment: experiment.clone(),
                series: name.clone(),
                n: st.n,
                seconds: st.seconds[k],
            });
        }
        rows.push((format!("{experiment}-n{}", st.n), step_rows));
    }
    let outside_regime = steps.iter().filter(|s| !s.inside_regime).map(|s| s.n).collect();
    Ok(LadderReport {
        experiment,
        config_hash: hash,
        seed: cfg.seed,
        reference,
        series,
        steps,
        rel_errors,
        non_increasing,
        spreads,
        outside_regime,
        rows,
        timings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jitter_band() {
        assert!(non_increasing_within_jitter(&[0.1, 0.105, 0.05]));
        assert!(!non_increasing_within_jitter(&[0.1, 0.12]));
        assert!(non_increasing_within_jitter(&[0.3]));
    }

    #[test]
    fn series_names() {
        use multislip::regularize::FromBelowVariant;
        assert_eq!(series_name(&RegularizerSpec::mollified()), "mollified");
        assert_eq!(series_name(&RegularizerSpec::from_below(FromBelowVariant::AffineCap)), "from_below_affine_cap");
    }
}

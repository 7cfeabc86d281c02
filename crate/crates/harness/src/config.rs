//! Experiment configuration.

use std::f64::consts::TAU;
use std::path::PathBuf;

use multislip::kernels::{FamilyParameters, FamilyTag, KernelFamily, KernelSpec, Normalization, TableSpec, KERNELSPEC_VERSION};
use multislip::measures::{BoundingBox, GridDensity, SpeciesSet};
use multislip::regularize::{DeltaSchedule, RegularizerSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Convergence,
    RegCompare,
    GammaRegime,
    KernelVerify,
    RelaxDemo,
}

impl ExperimentKind {
    pub fn id(self) -> &'static str {
        match self {
            Self::Convergence => "convergence",
            Self::RegCompare => "reg_compare",
            Self::GammaRegime => "gamma_regime",
            Self::KernelVerify => "kernel_verify",
            Self::RelaxDemo => "relax_demo",
        }
    }
}

/// Kernel descriptor. Same fields as `kernelspec-1`, with the version and
/// table resolution optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub family: FamilyTag,
    #[serde(default)]
    pub parameters: FamilyParameters,
    #[serde(default)]
    pub species: Vec<f64>,
    #[serde(default)]
    pub normalization: Normalization,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<TableSpec>,
}

impl KernelConfig {
    pub fn log(charges: &[f64]) -> Self {
        Self {
            family: FamilyTag::Log,
            parameters: FamilyParameters::default(),
            species: charges.to_vec(),
            normalization: Normalization::default(),
            quadrature: None,
        }
    }

    pub fn edge(lambda: f64, mu: f64, angles: &[f64]) -> Self {
        Self {
            family: FamilyTag::Edge,
            parameters: FamilyParameters { lambda: Some(lambda), mu: Some(mu), a: None },
            species: angles.to_vec(),
            normalization: Normalization::default(),
            quadrature: None,
        }
    }

    pub fn riesz(a: f64) -> Self {
        Self {
            family: FamilyTag::Riesz,
            parameters: FamilyParameters { lambda: None, mu: None, a: Some(a) },
            species: Vec::new(),
            normalization: Normalization::default(),
            quadrature: None,
        }
    }

    pub fn spec(&self) -> KernelSpec {
        KernelSpec {
            version: KERNELSPEC_VERSION.to_string(),
            family: self.family,
            parameters: self.parameters.clone(),
            species: self.species.clone(),
            normalization: self.normalization.clone(),
            quadrature: self.quadrature.unwrap_or_else(|| TableSpec::default_for(self.family)),
        }
    }

    pub fn build(&self) -> Result<KernelFamily> {
        Ok(self.spec().build()?)
    }

    /// Burgers vectors of the species: the edge angles, `0, π` for the two
    /// Riesz signs, evenly spaced directions for log charges.
    pub fn species_set(&self, fam: &KernelFamily) -> Result<SpeciesSet> {
        let n = fam.species_count();
        let angles = match fam.burgers_angles() {
            Some(a) => a,
            None => (0..n).map(|s| TAU * s as f64 / n as f64).collect(),
        };
        Ok(SpeciesSet::from_angles(&angles)?)
    }
}

/// Truncated Gaussian target density, split between species by `weights`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityConfig {
    pub sigma: f64,
    /// Cell size of the density handed to the discretizer.
    pub h: f64,
    /// Species fractions; uniform when empty.
    #[serde(default)]
    pub weights: Vec<f64>,
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self { sigma: 0.4, h: 1.0 / 64.0, weights: Vec::new() }
    }
}

impl DensityConfig {
    pub fn sample(&self, bbox: BoundingBox, h: f64, species: usize) -> Result<GridDensity> {
        let w = if self.weights.is_empty() {
            vec![1.0; species]
        } else if self.weights.len() == species {
            self.weights.clone()
        } else {
            return Err(HarnessError::Config(format!(
                "density has {} species weights, kernel has {species} species",
                self.weights.len()
            )));
        };
        let s2 = 2.0 * self.sigma * self.sigma;
        Ok(GridDensity::from_fn(bbox, h, species, |s, x| w[s] * (-x.norm_sq() / s2).exp())?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    /// Cell size of the continuum reference.
    pub reference_h: f64,
    /// Also evaluate `energy_split`.
    #[serde(default)]
    pub split: bool,
    /// Rasterize `F(b)` in the split; node spacing `δ/8` unless set.
    #[serde(default)]
    pub rasterize: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split_h: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { reference_h: 1.0 / 64.0, split: false, rasterize: false, split_h: None }
    }
}

/// Schedules and range of the γ_n sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeConfig {
    pub schedules: Vec<DeltaSchedule>,
    /// Sweep `n = 10^{lo}, …, 10^{hi}` with `per_decade` points per decade.
    pub log10_range: (f64, f64),
    pub per_decade: usize,
    pub threshold: f64,
}

impl Default for RegimeConfig {
    fn default() -> Self {
        Self {
            schedules: vec![
                DeltaSchedule::Power { c: 1.0, beta: 0.5 },
                DeltaSchedule::Exponential { c: 1.0, alpha: 1.0 },
            ],
            log10_range: (2.0, 5.0),
            per_decade: 4,
            threshold: multislip::regularize::REGIME_THRESHOLD,
        }
    }
}

/// Net Burgers density for the relaxation demo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum KappaConfig {
    /// `κ = m d ρ` with `ρ` a truncated Gaussian of mass one.
    Gaussian { direction: [f64; 2], magnitude: f64, sigma: f64 },
    /// `κ ≡ 0`.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxConfig {
    /// Burgers angles of the species.
    pub angles: Vec<f64>,
    pub kappa: KappaConfig,
    pub half_width: f64,
    pub h: f64,
    pub max_iterations: usize,
    /// Optional admissible decomposition (measures JSON) to compare against.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ansatz: Option<PathBuf>,
}

impl Default for RelaxConfig {
    fn default() -> Self {
        Self {
            angles: vec![0.0, std::f64::consts::PI],
            kappa: KappaConfig::Gaussian { direction: [1.0, 0.0], magnitude: 0.5, sigma: 0.2 },
            half_width: 0.5,
            h: 1.0 / 16.0,
            max_iterations: 5000,
            ansatz: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default = "default_kernel")]
    pub kernel: KernelConfig,
    #[serde(default = "default_regularizers")]
    pub regularizers: Vec<RegularizerSpec>,
    #[serde(default = "default_schedule")]
    pub schedule: DeltaSchedule,
    #[serde(default = "default_ladder")]
    pub n_ladder: Vec<u64>,
    #[serde(default = "default_bbox")]
    pub bbox: BoundingBox,
    #[serde(default)]
    pub density: DensityConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub regime: RegimeConfig,
    #[serde(default)]
    pub relax: RelaxConfig,
    #[serde(default)]
    pub seed: u64,
    /// Tolerance of the closed-form identity checks in `kernel_verify`.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

/// Log kernel without explicit charges: unit charge per species.
fn default_kernel() -> KernelConfig {
    KernelConfig::log(&[])
}

fn default_regularizers() -> Vec<RegularizerSpec> {
    vec![RegularizerSpec::mollified()]
}

fn default_schedule() -> DeltaSchedule {
    DeltaSchedule::Power { c: 1.0, beta: 0.5 }
}

fn default_ladder() -> Vec<u64> {
    vec![64, 256, 1024, 4096]
}

fn default_bbox() -> BoundingBox {
    BoundingBox::square(1.0)
}

fn default_tolerance() -> f64 {
    1e-8
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        let mut cfg = Self {
            kind,
            kernel: default_kernel(),
            regularizers: default_regularizers(),
            schedule: default_schedule(),
            n_ladder: default_ladder(),
            bbox: default_bbox(),
            density: DensityConfig::default(),
            grid: GridConfig::default(),
            regime: RegimeConfig::default(),
            relax: RelaxConfig::default(),
            seed: 0,
            tolerance: default_tolerance(),
            out: default_out(),
        };
        if kind == ExperimentKind::RegCompare {
            cfg.regularizers.push(RegularizerSpec::core_cutoff());
        }
        cfg
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_ladder.is_empty() || self.n_ladder[0] == 0 || self.n_ladder.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HarnessError::Config("n ladder must be positive and strictly increasing".into()));
        }
        let b = self.bbox;
        if !(b.x1 > b.x0 && b.y1 > b.y0) || ![b.x0, b.x1, b.y0, b.y1].iter().all(|v| v.is_finite()) {
            return Err(HarnessError::Config("bounding box is degenerate".into()));
        }
        if self.regularizers.is_empty() {
            return Err(HarnessError::Config("at least one regularizer is required".into()));
        }
        if self.kind == ExperimentKind::RegCompare && self.regularizers.len() < 2 {
            return Err(HarnessError::Config("reg_compare needs at least two regularizers".into()));
        }
        if !(self.grid.reference_h > 0.0) || !(self.density.h > 0.0) || !(self.density.sigma > 0.0) {
            return Err(HarnessError::Config("grid spacings and sigma must be positive".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(HarnessError::Config("tolerance must be positive".into()));
        }
        self.schedule.validate()?;
        if matches!(self.kind, ExperimentKind::Convergence | ExperimentKind::RegCompare) {
            if let Some(&n) = self.n_ladder.iter().find(|&&n| !self.schedule.delta(n).is_normal()) {
                return Err(HarnessError::Config(format!(
                    "delta_n underflows at n = {n}; use gamma_regime for this schedule"
                )));
            }
        }
        Ok(())
    }

    /// Canonical JSON, fields in declaration order.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON with `out` cleared, hex encoded. Where
    /// a run is written does not change what it computes.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        hex_digest(c.canonical_json().as_bytes())
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_and_hash_is_stable() {
        let cfg = ExperimentConfig::new(ExperimentKind::Convergence);
        let back = ExperimentConfig::from_json(&cfg.canonical_json()).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.hash(), back.hash());
        assert_eq!(cfg.hash().len(), 64);
        let mut other = cfg.clone();
        other.seed = 1;
        assert_ne!(cfg.hash(), other.hash());
    }

    #[test]
    fn minimal_json_fills_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"kind":"gamma_regime"}"#).unwrap();
        assert_eq!(cfg.n_ladder, vec![64, 256, 1024, 4096]);
        assert_eq!(cfg.kernel.family, FamilyTag::Log);
    }

    #[test]
    fn invalid_ladders_and_boxes_are_rejected() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Convergence);
        cfg.n_ladder = vec![64, 64];
        assert!(cfg.validate().is_err());
        cfg.n_ladder = vec![64];
        cfg.bbox = BoundingBox::new(0.0, 0.0, 0.0, 1.0);
        assert!(cfg.validate().is_err());
    }
}

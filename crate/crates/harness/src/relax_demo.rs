//! Relaxation demo: `ℰ(κ)` on a grid against an admissible ansatz.

use multislip::energy::{continuum_energy, relaxed_energy, ContinuumGrid, RelaxOptions, RelaxResult, TraceRow};
use multislip::kernels::{FamilyTag, KernelFamily};
use multislip::measures::{BoundingBox, GridDensity, NetBurgersField, SpeciesSet};
use multislip::Vec2d;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, KappaConfig};
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelaxSummary {
    pub config_hash: String,
    pub seed: u64,
    pub value: f64,
    pub residual: f64,
    pub iterations: usize,
    /// Energy of the comparison ansatz, when one is admissible.
    pub ansatz_value: Option<f64>,
    /// `value ≤ ansatz_value` up to rounding.
    pub below_ansatz: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct RelaxBundle {
    pub summary: RelaxSummary,
    pub result: RelaxResult,
    pub ansatz: Option<GridDensity>,
}

impl RelaxBundle {
    pub fn trace(&self) -> &[TraceRow] {
        &self.result.trace
    }
}

/// The relaxation kernel: a log kernel without charges gets unit charges,
/// one per configured species.
pub fn relax_kernel(cfg: &ExperimentConfig) -> Result<KernelFamily> {
    let mut k = cfg.kernel.clone();
    if k.family == FamilyTag::Log && k.species.is_empty() {
        k.species = vec![1.0; cfg.relax.angles.len()];
    }
    let fam = k.build()?;
    if fam.species_count() != cfg.relax.angles.len() {
        return Err(HarnessError::Config(format!(
            "kernel has {} species but relax.angles lists {}",
            fam.species_count(),
            cfg.relax.angles.len()
        )));
    }
    Ok(fam)
}

/// `(bbox, h, net density per cell, ρ)` where `ρ` is the total-mass profile.
fn kappa_grid(cfg: &ExperimentConfig) -> Result<(NetBurgersField, Vec2d, GridDensity)> {
    let r = &cfg.relax;
    let bbox = BoundingBox::square(r.half_width);
    let (target, rho) = match r.kappa {
        KappaConfig::Gaussian { direction, magnitude, sigma } => {
            let d = Vec2d::new(direction[0], direction[1]);
            if !(d.norm() > 0.0) {
                return Err(HarnessError::Config("kappa direction must be non-zero".into()));
            }
            let rho = GridDensity::truncated_gaussian(bbox, r.h, sigma)?;
            (d.scale(magnitude / d.norm()), rho)
        }
        KappaConfig::Zero => {
            // Unit mass on the cell containing the origin, indexed as the solver does.
            let shape = GridDensity::truncated_gaussian(bbox, r.h, 1.0)?;
            let (nx, ny) = (shape.nx(), shape.ny());
            let i = ((-bbox.x0 / r.h).floor() as usize).min(nx - 1);
            let j = ((-bbox.y0 / r.h).floor() as usize).min(ny - 1);
            let mut vals = vec![0.0; nx * ny];
            vals[j * nx + i] = 1.0 / (r.h * r.h);
            let rho = GridDensity::new(bbox, r.h, vec![vals])?;
            (Vec2d::zero(), rho)
        }
    };
    let values = rho.values(0).iter().map(|&v| target.scale(v)).collect();
    let kappa = NetBurgersField::Grid { bbox: rho.bbox(), h: rho.h(), nx: rho.nx(), ny: rho.ny(), values };
    Ok((kappa, target, rho))
}

/// Minimum-norm species fractions `c ≥ 0` with `Σ c_s ξ_s = target` and
/// `Σ c_s = 1`, or `None` when that solution has a negative entry.
pub fn proportional_fractions(species: &SpeciesSet, target: Vec2d) -> Option<Vec<f64>> {
    let ns = species.len();
    let a = DMatrix::from_fn(3, ns, |r, s| match r {
        0 => species.xi(s).x,
        1 => species.xi(s).y,
        _ => 1.0,
    });
    let b = DVector::from_vec(vec![target.x, target.y, 1.0]);
    let c = a.clone().pseudo_inverse(1e-12).ok()? * &b;
    if (&a * &c - b).norm() > 1e-10 || c.iter().any(|&v| v < -1e-12) {
        return None;
    }
    Some(c.iter().map(|v| v.max(0.0)).collect())
}

pub fn run_relax_demo(cfg: &ExperimentConfig) -> Result<RelaxBundle> {
    let base = relax_kernel(cfg)?;
    let species = SpeciesSet::from_angles(&cfg.relax.angles)?;
    let (kappa, target, rho) = kappa_grid(cfg)?;
    let opts = RelaxOptions { max_iterations: cfg.relax.max_iterations, ..Default::default() };
    let result = relaxed_energy(&kappa, &species, &base, &opts)?;

    let ansatz = match &cfg.relax.ansatz {
        Some(path) => Some(GridDensity::from_json(&std::fs::read_to_string(path)?)?),
        None => proportional_fractions(&species, target)
            .map(|c| {
                let vals = c.iter().map(|&f| rho.values(0).iter().map(|v| f * v).collect()).collect();
                GridDensity::new(rho.bbox(), rho.h(), vals)
            })
            .transpose()?,
    };
    let ansatz_value = match &ansatz {
        Some(a) => Some(continuum_energy(a, &base, ContinuumGrid::default())?.total),
        None => None,
    };
    let below = ansatz_value.map(|a| result.value <= a + 1e-12 * a.abs().max(1.0));
    let summary = RelaxSummary {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        value: result.value,
        residual: result.residual,
        iterations: result.iterations,
        ansatz_value,
        below_ansatz: below,
    };
    Ok(RelaxBundle { summary, result, ansatz })
}

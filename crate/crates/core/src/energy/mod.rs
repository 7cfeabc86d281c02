//! Discrete and continuum interaction energies, the Fourier diagnostic and
//! the grid relaxation.

mod cells;
mod continuum;
mod direct;
mod fft;
mod fourier;
mod relax;

use serde::{Deserialize, Serialize};

pub use cells::CellKernel;
pub use continuum::{continuum_energy, ContinuumGrid};
pub use direct::{energy_direct, energy_split, SplitGrid, F_CROSS_CHECK};
pub use fourier::{fourier_psd_check, FourierDiagnostic, FourierSample};
pub use relax::{relaxed_energy, RelaxOptions, RelaxResult, TraceRow};

/// Contribution of the ordered species pair `(s, t)` to the total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairContribution {
    pub s: usize,
    pub t: usize,
    pub value: f64,
}

/// `total = G + F` with the diagonal self-energy and a per-pair table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub total: f64,
    #[serde(rename = "G")]
    pub g: f64,
    /// Convolution-square part from pairwise (or exact cell-pair) sums.
    #[serde(rename = "F_pairwise")]
    pub f_pairwise: f64,
    /// Convolution-square part from a rasterized `L²` norm, when computed.
    #[serde(rename = "F_grid")]
    pub f_grid: Option<f64>,
    pub gamma: f64,
    pub pairs: Vec<PairContribution>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl EnergyBreakdown {
    /// `|F_pairwise − F_grid| / max(F_pairwise, 1e−8)`.
    pub fn f_discrepancy(&self) -> Option<f64> {
        self.f_grid.map(|fg| (self.f_pairwise - fg).abs() / self.f_pairwise.max(1e-8))
    }

    pub fn pair(&self, s: usize, t: usize) -> Option<f64> {
        self.pairs.iter().find(|p| p.s == s && p.t == t).map(|p| p.value)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("breakdown serializes")
    }
}

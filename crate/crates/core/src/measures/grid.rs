use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vec2d;

/// Axis-aligned box, serialized as `[x0, y0, x1, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BoundingBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl From<[f64; 4]> for BoundingBox {
    fn from(b: [f64; 4]) -> Self {
        Self {
            x0: b[0],
            y0: b[1],
            x1: b[2],
            y1: b[3],
        }
    }
}

impl From<BoundingBox> for [f64; 4] {
    fn from(b: BoundingBox) -> Self {
        [b.x0, b.y0, b.x1, b.y1]
    }
}

impl BoundingBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn square(half: f64) -> Self {
        Self::new(-half, -half, half, half)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn inflate(&self, by: f64) -> Self {
        Self::new(self.x0 - by, self.y0 - by, self.x1 + by, self.y1 + by)
    }

    pub fn contains(&self, p: Vec2d) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }
}

#[derive(Deserialize)]
struct RawGrid {
    #[serde(rename = "box")]
    bbox: BoundingBox,
    h: f64,
    species: Vec<Vec<f64>>,
}

/// Piecewise-constant densities `μ^s` on a uniform grid of square cells of
/// side `h`, row-major with `x` varying fastest. Total mass is one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct GridDensity {
    #[serde(rename = "box")]
    bbox: BoundingBox,
    h: f64,
    #[serde(skip)]
    nx: usize,
    #[serde(skip)]
    ny: usize,
    species: Vec<Vec<f64>>,
}

impl TryFrom<RawGrid> for GridDensity {
    type Error = Error;
    fn try_from(r: RawGrid) -> Result<Self> {
        Self::new(r.bbox, r.h, r.species)
    }
}

pub(crate) const MASS_TOL: f64 = 1e-12;

fn cells(len: f64, h: f64) -> Result<usize> {
    let n = (len / h).round();
    if !(n >= 1.0) || (n * h - len).abs() > 1e-9 * len.max(1.0) {
        return Err(Error::Domain(format!(
            "box side {len} is not a multiple of h = {h}"
        )));
    }
    Ok(n as usize)
}

impl GridDensity {
    pub fn new(bbox: BoundingBox, h: f64, species: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_mass_tolerance(bbox, h, species, MASS_TOL)
    }

    /// As [`Self::new`] with a looser mass check, for iterates that satisfy
    /// the mass constraint only to solver tolerance.
    pub(crate) fn with_mass_tolerance(
        bbox: BoundingBox,
        h: f64,
        species: Vec<Vec<f64>>,
        tol: f64,
    ) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Domain("h must be positive".into()));
        }
        let nx = cells(bbox.width(), h)?;
        let ny = cells(bbox.height(), h)?;
        if species.is_empty() {
            return Err(Error::Domain("density needs at least one species".into()));
        }
        for v in &species {
            if v.len() != nx * ny {
                return Err(Error::Domain(format!(
                    "species array has {} cells, expected {}",
                    v.len(),
                    nx * ny
                )));
            }
            if v.iter().any(|&m| !(m >= 0.0 && m.is_finite())) {
                return Err(Error::Domain(
                    "densities must be finite and non-negative".into(),
                ));
            }
        }
        let g = Self {
            bbox,
            h,
            nx,
            ny,
            species,
        };
        let total = g.total_mass();
        if (total - 1.0).abs() > tol {
            return Err(Error::Domain(format!("total mass {total} differs from 1")));
        }
        Ok(g)
    }

    /// Samples `f(s, cell centre)` and rescales to unit total mass.
    pub fn from_fn(
        bbox: BoundingBox,
        h: f64,
        species: usize,
        f: impl Fn(usize, Vec2d) -> f64,
    ) -> Result<Self> {
        let nx = cells(bbox.width(), h)?;
        let ny = cells(bbox.height(), h)?;
        let mut vals: Vec<Vec<f64>> = (0..species)
            .map(|s| {
                (0..nx * ny)
                    .map(|k| {
                        let c = Vec2d::new(
                            bbox.x0 + (k % nx) as f64 * h + 0.5 * h,
                            bbox.y0 + (k / nx) as f64 * h + 0.5 * h,
                        );
                        f(s, c).max(0.0)
                    })
                    .collect()
            })
            .collect();
        normalize(&mut vals, h)?;
        Self::new(bbox, h, vals)
    }

    /// Isotropic Gaussian of width `sigma` cut off outside the box, single species.
    pub fn truncated_gaussian(bbox: BoundingBox, h: f64, sigma: f64) -> Result<Self> {
        Self::from_fn(bbox, h, 1, |_, x| {
            (-x.norm_sq() / (2.0 * sigma * sigma)).exp()
        })
    }

    pub fn bbox(&self) -> BoundingBox {
        self.bbox
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn species_count(&self) -> usize {
        self.species.len()
    }

    pub fn values(&self, s: usize) -> &[f64] {
        &self.species[s]
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Vec2d {
        Vec2d::new(
            self.bbox.x0 + (i as f64 + 0.5) * self.h,
            self.bbox.y0 + (j as f64 + 0.5) * self.h,
        )
    }

    pub fn species_mass(&self, s: usize) -> f64 {
        crate::summation::exact_sum(self.species[s].iter().map(|m| m * self.h * self.h))
    }

    pub fn total_mass(&self) -> f64 {
        (0..self.species.len()).map(|s| self.species_mass(s)).sum()
    }

    /// `max_s max_cell μ^s`.
    pub fn sup_norm(&self) -> f64 {
        self.species.iter().flatten().fold(0.0, |m, &v| m.max(v))
    }

    /// Density of species `s` at `x` (zero outside the box).
    pub fn density_at(&self, s: usize, x: Vec2d) -> f64 {
        let i = ((x.x - self.bbox.x0) / self.h).floor();
        let j = ((x.y - self.bbox.y0) / self.h).floor();
        if i < 0.0 || j < 0.0 || i >= self.nx as f64 || j >= self.ny as f64 {
            return 0.0;
        }
        self.species[s][j as usize * self.nx + i as usize]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("grid serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Serialization(e.to_string()))
    }
}

fn normalize(vals: &mut [Vec<f64>], h: f64) -> Result<()> {
    let total: f64 = vals.iter().flatten().sum::<f64>() * h * h;
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Domain("density has no mass".into()));
    }
    for v in vals.iter_mut().flatten() {
        *v /= total;
    }
    Ok(())
}

/// Smooths each species with the bump `η_ε ∝ exp(−1/(1 − |x/ε|²))`.
///
/// The kernel is normalized on the grid so the mass is preserved to rounding.
/// The box grows by `⌈ε/h⌉` cells per side; the support grows by less than `ε`.
pub fn mollify_density(mu: &GridDensity, eps: f64) -> Result<GridDensity> {
    let h = mu.h;
    if !(eps > 0.0) {
        return Err(Error::Domain("eps must be positive".into()));
    }
    if h > eps / 4.0 {
        return Err(Error::Resolution {
            h,
            required: eps / 4.0,
        });
    }
    let k = (eps / h).ceil() as usize;
    let w = 2 * k + 1;
    let mut kernel = vec![0.0; w * w];
    for a in 0..w {
        for b in 0..w {
            let r2 = (((a as f64 - k as f64) * h).powi(2) + ((b as f64 - k as f64) * h).powi(2))
                / (eps * eps);
            if r2 < 1.0 {
                kernel[b * w + a] = (-1.0 / (1.0 - r2)).exp();
            }
        }
    }
    let ks: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|v| *v /= ks);

    let (nx, ny) = (mu.nx + 2 * k, mu.ny + 2 * k);
    let mut vals: Vec<Vec<f64>> = mu
        .species
        .iter()
        .map(|src| {
            let mut out = vec![0.0; nx * ny];
            out.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
                for (i, o) in row.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for b in 0..w {
                        let sj = j as isize - b as isize;
                        if sj < 0 || sj >= mu.ny as isize {
                            continue;
                        }
                        for a in 0..w {
                            let si = i as isize - a as isize;
                            if si < 0 || si >= mu.nx as isize {
                                continue;
                            }
                            acc += kernel[b * w + a] * src[sj as usize * mu.nx + si as usize];
                        }
                    }
                    *o = acc;
                }
            });
            out
        })
        .collect();
    // Remove the last rounding drift so the mass check holds exactly.
    let total: f64 = vals.iter().flatten().sum::<f64>() * h * h;
    vals.iter_mut().flatten().for_each(|v| *v /= total);
    GridDensity::new(mu.bbox.inflate(k as f64 * h), h, vals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_and_validation() {
        let g = GridDensity::from_fn(BoundingBox::square(1.0), 0.25, 2, |s, x| {
            1.0 + s as f64 + x.x.abs()
        })
        .unwrap();
        let j = g.to_json();
        assert!(j.contains("\"box\":[-1.0,-1.0,1.0,1.0]"));
        assert_eq!(GridDensity::from_json(&j).unwrap(), g);
        assert!(GridDensity::new(BoundingBox::square(1.0), 1.0, vec![vec![0.3; 4]]).is_err());
        assert!(GridDensity::new(BoundingBox::square(1.0), 0.7, vec![vec![0.25; 4]]).is_err());
    }

    #[test]
    fn mollify_preserves_mass_and_bounds_support() {
        let g = GridDensity::from_fn(BoundingBox::square(1.0), 0.125, 1, |_, x| {
            if (x.x - 0.0625).abs() < 1e-9 && (x.y - 0.0625).abs() < 1e-9 {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let eps = 0.5;
        let m = mollify_density(&g, eps).unwrap();
        assert!((m.total_mass() - 1.0).abs() <= MASS_TOL);
        for j in 0..m.ny() {
            for i in 0..m.nx() {
                if m.values(0)[j * m.nx() + i] > 0.0 {
                    let c = m.cell_center(i, j);
                    assert!((c.x - 0.0625).abs() < eps && (c.y - 0.0625).abs() < eps);
                }
            }
        }
        assert!(matches!(
            mollify_density(&g, 0.3),
            Err(Error::Resolution { .. })
        ));
    }
}

//! Lattice discretization of a grid density into a particle configuration.
//!
//! Species `s` lives on the sublattice `q r_n ℤ² + ℓ_s r_n` with
//! `q = ⌈√S⌉` and `ℓ_s = (s mod q, ⌊s/q⌋)`, so distinct atoms are at least
//! `r_n` apart. Each site owns the square of side `q r_n` above and to the
//! right of it, so the site cells of one species tile the plane; atoms
//! are assigned by systematic sampling of the site masses in serpentine
//! order, which keeps the empirical measure close to `μ^s` in the weak sense.

use serde::{Deserialize, Serialize};

use super::grid::GridDensity;
use super::{Configuration, SpeciesSet};
use crate::error::{Error, Result};
use crate::Vec2d;

/// Guards the separation bound against rounding in `pitch · k`.
const PITCH_GUARD: f64 = 1.0 + 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizeInfo {
    pub r_n: f64,
    pub sup_norm: f64,
    pub species_counts: Vec<usize>,
    /// Atoms that had to leave their sampled site because it was taken.
    pub relocated: usize,
}

/// `r_n = 1/(⌈√S⌉ √(n ‖μ‖_∞))`.
pub fn lattice_spacing(species: usize, n: usize, sup_norm: f64) -> f64 {
    let q = (species as f64).sqrt().ceil();
    1.0 / (q * (n as f64 * sup_norm).sqrt())
}

fn species_counts(mu: &GridDensity, n: usize) -> Vec<usize> {
    let masses: Vec<f64> = (0..mu.species_count())
        .map(|s| mu.species_mass(s))
        .collect();
    let total: f64 = masses.iter().sum();
    let quotas: Vec<f64> = masses.iter().map(|m| n as f64 * m / total).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &s in order.iter().take(n.saturating_sub(assigned)) {
        counts[s] += 1;
    }
    counts
}

/// Prefix masses of one species; `mass(rect)` is exact for the
/// piecewise-constant density.
struct Prefix<'a> {
    mu: &'a GridDensity,
    p: Vec<f64>,
}

impl<'a> Prefix<'a> {
    fn new(mu: &'a GridDensity, s: usize) -> Self {
        let (nx, ny, h) = (mu.nx(), mu.ny(), mu.h());
        let v = mu.values(s);
        let mut p = vec![0.0; (nx + 1) * (ny + 1)];
        for j in 0..ny {
            for i in 0..nx {
                p[(j + 1) * (nx + 1) + i + 1] =
                    v[j * nx + i] * h * h + p[j * (nx + 1) + i + 1] + p[(j + 1) * (nx + 1) + i]
                        - p[j * (nx + 1) + i];
            }
        }
        Self { mu, p }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.p[j * (self.mu.nx() + 1) + i]
    }

    /// Mass of `[box.x0, x] × [box.y0, y]`.
    fn cumulative(&self, x: f64, y: f64) -> f64 {
        let b = self.mu.bbox();
        let h = self.mu.h();
        let (nx, ny) = (self.mu.nx(), self.mu.ny());
        let split = |t: f64, n: usize| -> (usize, f64) {
            let u = (t / h).clamp(0.0, n as f64);
            let i = (u.floor() as usize).min(n - 1);
            (i, u - i as f64)
        };
        let (i, fx) = split(x - b.x0, nx);
        let (j, fy) = split(y - b.y0, ny);
        let (p00, p10, p01, p11) = (
            self.at(i, j),
            self.at(i + 1, j),
            self.at(i, j + 1),
            self.at(i + 1, j + 1),
        );
        p00 + fx * (p10 - p00) + fy * (p01 - p00) + fx * fy * (p11 - p10 - p01 + p00)
    }

    fn mass(&self, x0: f64, y0: f64, x1: f64, y1: f64) -> f64 {
        (self.cumulative(x1, y1) - self.cumulative(x0, y1) - self.cumulative(x1, y0)
            + self.cumulative(x0, y0))
        .max(0.0)
    }
}

/// Positive cells of one species, for distance queries.
struct Support {
    cells: Vec<(f64, f64, f64, f64)>,
}

impl Support {
    fn new(mu: &GridDensity, s: usize) -> Self {
        let h = mu.h();
        let v = mu.values(s);
        let b = mu.bbox();
        let cells = (0..mu.nx() * mu.ny())
            .filter(|&k| v[k] > 0.0)
            .map(|k| {
                let x0 = b.x0 + (k % mu.nx()) as f64 * h;
                let y0 = b.y0 + (k / mu.nx()) as f64 * h;
                (x0, y0, x0 + h, y0 + h)
            })
            .collect();
        Self { cells }
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        self.cells.iter().fold(
            (
                f64::INFINITY,
                f64::INFINITY,
                f64::NEG_INFINITY,
                f64::NEG_INFINITY,
            ),
            |a, c| (a.0.min(c.0), a.1.min(c.1), a.2.max(c.2), a.3.max(c.3)),
        )
    }

    fn distance(&self, p: Vec2d) -> f64 {
        self.cells
            .iter()
            .map(|&(x0, y0, x1, y1)| {
                let dx = (x0 - p.x).max(p.x - x1).max(0.0);
                let dy = (y0 - p.y).max(p.y - y1).max(0.0);
                dx.hypot(dy)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn discretize(mu: &GridDensity, species: &SpeciesSet, n: usize) -> Result<Configuration> {
    discretize_with_info(mu, species, n).map(|r| r.0)
}

pub fn discretize_with_info(
    mu: &GridDensity,
    species: &SpeciesSet,
    n: usize,
) -> Result<(Configuration, DiscretizeInfo)> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    let sn = mu.species_count();
    if species.len() != sn {
        return Err(Error::Domain(
            "species set does not match the density".into(),
        ));
    }
    let sup = mu.sup_norm();
    let r_n = lattice_spacing(sn, n, sup);
    let q = (sn as f64).sqrt().ceil() as i64;
    let pitch = r_n * PITCH_GUARD;
    let side = q as f64 * pitch;
    let reach = 1.0 / sup;
    let counts = species_counts(mu, n);
    let mut positions = vec![Vec::new(); sn];
    let mut relocated = 0;

    for s in 0..sn {
        let ns = counts[s];
        if ns == 0 {
            continue;
        }
        let (ox, oy) = (s as i64 % q, s as i64 / q);
        let site =
            |i: i64, j: i64| Vec2d::new(pitch * (q * i + ox) as f64, pitch * (q * j + oy) as f64);
        let prefix = Prefix::new(mu, s);
        let support = Support::new(mu, s);
        let (bx0, by0, bx1, by1) = support.bounds();
        let index_range = |lo: f64, hi: f64, o: i64| {
            let a = (((lo - 0.5 * side) / pitch - o as f64) / q as f64).floor() as i64 - 1;
            let b = (((hi + 0.5 * side) / pitch - o as f64) / q as f64).ceil() as i64 + 1;
            (a, b)
        };
        let (ia, ib) = index_range(bx0, bx1, ox);
        let (ja, jb) = index_range(by0, by1, oy);

        // Serpentine walk over sites with positive mass.
        let mut sites: Vec<((i64, i64), f64)> = Vec::new();
        for j in ja..=jb {
            let row: Vec<i64> = if (j - ja) % 2 == 0 {
                (ia..=ib).collect()
            } else {
                (ia..=ib).rev().collect()
            };
            for i in row {
                let c = site(i, j);
                let m = prefix.mass(c.x, c.y, c.x + side, c.y + side);
                if m > 0.0 {
                    sites.push(((i, j), m));
                }
            }
        }
        let total: f64 = sites.iter().map(|s| s.1).sum();
        let mut hits: Vec<((i64, i64), usize)> = Vec::with_capacity(ns);
        let mut cum = 0.0;
        let mut k = 0usize;
        for (idx, &(ij, m)) in sites.iter().enumerate() {
            cum = if idx + 1 == sites.len() {
                ns as f64
            } else {
                cum + ns as f64 * m / total
            };
            let mut c = 0;
            while k < ns && (k as f64 + 0.5) < cum {
                c += 1;
                k += 1;
            }
            if c > 0 {
                hits.push((ij, c));
            }
        }

        let near_enough =
            |p: Vec2d| side * std::f64::consts::SQRT_2 <= reach || support.distance(p) <= reach;
        let mut taken: std::collections::HashSet<(i64, i64)> = std::collections::HashSet::new();
        let mut pending: Vec<(i64, i64)> = Vec::new();
        for &(ij, c) in &hits {
            if near_enough(site(ij.0, ij.1)) {
                taken.insert(ij);
                positions[s].push(site(ij.0, ij.1));
                pending.extend(std::iter::repeat(ij).take(c - 1));
            } else {
                pending.extend(std::iter::repeat(ij).take(c));
            }
        }

        // Move surplus atoms to the nearest free eligible site.
        let max_ring = (((bx1 - bx0).max(by1 - by0) + 2.0 * reach) / side).ceil() as i64 + 2;
        for ij in pending {
            let mut placed = false;
            'rings: for ring in 1..=max_ring {
                let mut cands: Vec<(f64, (i64, i64))> = Vec::new();
                for dj in -ring..=ring {
                    for di in -ring..=ring {
                        if di.abs().max(dj.abs()) != ring {
                            continue;
                        }
                        let c = (ij.0 + di, ij.1 + dj);
                        if !taken.contains(&c) {
                            cands.push((((di * di + dj * dj) as f64).sqrt(), c));
                        }
                    }
                }
                cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                for (_, c) in cands {
                    let p = site(c.0, c.1);
                    if support.distance(p) <= reach {
                        taken.insert(c);
                        positions[s].push(p);
                        relocated += 1;
                        placed = true;
                        break 'rings;
                    }
                }
            }
            if !placed {
                return Err(Error::Infeasible(format!(
                    "species {s} needs {ns} sites within {reach} of its support; enlarge the box or reduce n"
                )));
            }
        }
    }
    let config = Configuration::new(species.clone(), positions)?;
    Ok((
        config,
        DiscretizeInfo {
            r_n,
            sup_norm: sup,
            species_counts: counts,
            relocated,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::super::{grid::BoundingBox, min_separation};
    use super::*;

    #[test]
    fn spacing_example() {
        assert!((lattice_spacing(2, 100, 1.0) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn largest_remainder() {
        let g = GridDensity::new(
            BoundingBox::square(0.5),
            0.5,
            vec![vec![0.5; 4], vec![0.25; 4], vec![0.25; 4]],
        )
        .unwrap();
        assert_eq!(species_counts(&g, 7), vec![3, 2, 2]);
        assert_eq!(species_counts(&g, 8), vec![4, 2, 2]);
    }

    #[test]
    fn uniform_square_gives_regular_lattice() {
        let g = GridDensity::from_fn(BoundingBox::new(0.0, 0.0, 1.0, 1.0), 0.125, 1, |_, _| 1.0)
            .unwrap();
        let sp = SpeciesSet::from_angles(&[0.0]).unwrap();
        let (c, info) = discretize_with_info(&g, &sp, 64).unwrap();
        assert_eq!(c.n(), 64);
        assert_eq!(info.relocated, 0);
        let r = lattice_spacing(1, 64, 1.0);
        assert!(min_separation(&c).unwrap() >= r);
        // Exactly the 8 x 8 block of lattice sites covering the square.
        let mut ks: Vec<(i64, i64)> = c
            .positions(0)
            .iter()
            .map(|x| ((x.x / r).round() as i64, (x.y / r).round() as i64))
            .collect();
        ks.sort();
        let expect: Vec<(i64, i64)> = (0..8).flat_map(|i| (0..8).map(move |j| (i, j))).collect();
        assert_eq!(ks, expect);
    }
}

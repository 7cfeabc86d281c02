//! Relaxation `ℰ(κ)`: the continuum energy minimized over species
//! decompositions `μ = (μ^s)` with `Σ_s ξ_s μ^s = κ`, total mass one and
//! support in `supp κ` plus the origin cell.
//!
//! Projected gradient descent on the grid quadratic form. The projection onto
//! the feasible polyhedron is exact: per cell the linear constraints are
//! eliminated through `ker X`, and the mass constraint is a scalar multiplier
//! found by bisection. The result is an upper bound on the grid
//! infimum together with its stationarity and constraint residuals.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::continuum::{CellOperator, ContinuumGrid};
use super::EnergyBreakdown;
use crate::error::{Error, Result};
use crate::kernels::KernelFamily;
use crate::measures::{BoundingBox, GridDensity, NetBurgersField, SpeciesSet};
use crate::Vec2d;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxOptions {
    pub max_iterations: usize,
    /// Stop when a projected step moves no entry by more than
    /// `tolerance · max(1, ‖μ‖_∞)`.
    pub tolerance: f64,
    pub residual_tolerance: f64,
    pub grid: ContinuumGrid,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            tolerance: 1e-9,
            residual_tolerance: 1e-10,
            grid: ContinuumGrid::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct RelaxResult {
    pub value: f64,
    pub energy: EnergyBreakdown,
    pub minimizer: GridDensity,
    /// `max(max_c |Σ_s ξ_s μ_c^s − κ_c|, |mass − 1|)` at the minimizer.
    pub residual: f64,
    pub iterations: usize,
    pub trace: Vec<TraceRow>,
}

impl RelaxResult {
    /// Trace as CSV with header `iteration,objective,residual`.
    pub fn trace_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.trace {
            w.serialize(row).map_err(|e| Error::Serialization(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Serialization(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
    }
}

/// Range `[min, max]` of `Σ_s m_s` over `m ≥ 0` with `Σ_s m_s ξ_s = k`, or
/// `None` if no such `m` exists. Extreme points have at most two non-zero
/// entries, so enumerating singletons and pairs suffices.
fn cell_mass_range(xi: &[Vec2d], k: Vec2d, unbounded: bool) -> Option<(f64, f64)> {
    let tol = 1e-12 * k.norm().max(1.0);
    let mut masses = Vec::new();
    if k.norm() <= tol {
        masses.push(0.0);
    }
    for &a in xi {
        let m = k.dot(a);
        if m >= -tol && (k - a.scale(m)).norm() <= tol {
            masses.push(m.max(0.0));
        }
    }
    for i in 0..xi.len() {
        for j in (i + 1)..xi.len() {
            let (a, b) = (xi[i], xi[j]);
            let det = a.x * b.y - a.y * b.x;
            if det.abs() < 1e-12 {
                continue;
            }
            let p = (k.x * b.y - k.y * b.x) / det;
            let q = (a.x * k.y - a.y * k.x) / det;
            if p >= -tol && q >= -tol {
                masses.push(p.max(0.0) + q.max(0.0));
            }
        }
    }
    if masses.is_empty() {
        return None;
    }
    let lo = masses.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = if unbounded { f64::INFINITY } else { masses.iter().copied().fold(0.0, f64::max) };
    Some((lo, hi))
}

/// Whether `0 ∈ conv{ξ_s}`, i.e. some non-zero `m ≥ 0` has `Σ m_s ξ_s = 0`.
fn has_null_cone(xi: &[Vec2d]) -> bool {
    let cross = |a: Vec2d, b: Vec2d| a.x * b.y - a.y * b.x;
    let n = xi.len();
    for i in 0..n {
        for j in (i + 1)..n {
            if xi[i].dot(xi[j]) < -1.0 + 1e-12 {
                return true;
            }
            for k in (j + 1)..n {
                let (a, b, c) = (xi[i], xi[j], xi[k]);
                let d = [cross(a, b), cross(b, c), cross(c, a)];
                if d.iter().all(|&v| v >= -1e-12) || d.iter().all(|&v| v <= 1e-12) {
                    return true;
                }
            }
        }
    }
    false
}

struct Constraints {
    ns: usize,
    h: f64,
    xi: Vec<Vec2d>,
    kappa: Vec<Vec2d>,
    mask: Vec<bool>,
    /// Orthonormal basis `N` of `ker X`, `S × d` row-major.
    null: Vec<f64>,
    d: usize,
    /// `Nᵀ 1`.
    null_one: Vec<f64>,
    /// `X⁺ κ_c` per cell, `S` entries each.
    base: Vec<Vec<f64>>,
}

/// Projection of `zs` onto `{z : N z ≥ b}` in `ℝ^d`.
fn project_polytope(zs: &[f64], null: &[f64], b: &[f64], d: usize) -> Vec<f64> {
    let ns = b.len();
    if d == 1 {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..ns {
            let n = null[i];
            if n > 1e-14 {
                lo = lo.max(b[i] / n);
            } else if n < -1e-14 {
                hi = hi.min(b[i] / n);
            }
        }
        let z = if lo > hi { 0.5 * (lo + hi) } else { zs[0].clamp(lo, hi) };
        return vec![z];
    }
    // The projection lies in the relative interior of one face; among the
    // feasible projections onto face hulls it is the nearest.
    let feasible = |z: &[f64]| {
        (0..ns).all(|i| {
            let v: f64 = (0..d).map(|k| null[i * d + k] * z[k]).sum();
            v >= b[i] - 1e-12 * (1.0 + b[i].abs())
        })
    };
    if feasible(zs) {
        return zs.to_vec();
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for set in 1u32..(1 << ns) {
        let active: Vec<usize> = (0..ns).filter(|&i| set & (1 << i) != 0).collect();
        if active.len() > d {
            continue;
        }
        let a = DMatrix::from_fn(active.len(), d, |r, k| null[active[r] * d + k]);
        let rhs = nalgebra::DVector::from_fn(active.len(), |r, _| {
            let i = active[r];
            (0..d).map(|k| null[i * d + k] * zs[k]).sum::<f64>() - b[i]
        });
        let Some(y) = (&a * a.transpose()).lu().solve(&rhs) else {
            continue;
        };
        let shift = a.transpose() * y;
        let z: Vec<f64> = (0..d).map(|k| zs[k] - shift[k]).collect();
        if !feasible(&z) {
            continue;
        }
        let dist: f64 = shift.iter().map(|v| v * v).sum();
        if best.as_ref().map_or(true, |(bd, _)| dist < *bd) {
            best = Some((dist, z));
        }
    }
    best.map(|b| b.1).unwrap_or_else(|| zs.to_vec())
}

impl Constraints {
    /// Cell `c` of the projection of `v` shifted by `−η h² 1`, in `z` coordinates.
    fn cell_z(&self, v: &[Vec<f64>], c: usize, eta: f64) -> Vec<f64> {
        let (ns, d) = (self.ns, self.d);
        let h2 = self.h * self.h;
        let zs: Vec<f64> = (0..d)
            .map(|k| (0..ns).map(|s| self.null[s * d + k] * v[s][c]).sum::<f64>() - eta * h2 * self.null_one[k])
            .collect();
        let b: Vec<f64> = self.base[c].iter().map(|m| -m).collect();
        project_polytope(&zs, &self.null, &b, d)
    }

    fn mass(&self, v: &[Vec<f64>], eta: f64) -> f64 {
        let h2 = self.h * self.h;
        let mut m = 0.0;
        for c in 0..self.kappa.len() {
            if !self.mask[c] {
                continue;
            }
            m += self.base[c].iter().sum::<f64>();
            if self.d > 0 {
                let z = self.cell_z(v, c, eta);
                m += z.iter().zip(&self.null_one).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        h2 * m
    }

    /// Euclidean projection onto the feasible set. Per cell the equalities are
    /// eliminated through `ker X`; the mass constraint is met by a scalar
    /// shift `η` along `1`, found by bisection since the mass is monotone in `η`.
    fn project(&self, v: &[Vec<f64>]) -> (Vec<Vec<f64>>, f64) {
        let (ns, d) = (self.ns, self.d);
        let coupled = d > 0 && self.null_one.iter().map(|x| x * x).sum::<f64>() > 1e-24;
        let eta = if coupled {
            let (mut lo, mut hi) = (-1.0, 1.0);
            while self.mass(v, lo) < 1.0 && lo > -1e300 {
                lo *= 2.0;
            }
            while self.mass(v, hi) > 1.0 && hi < 1e300 {
                hi *= 2.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if self.mass(v, mid) > 1.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        } else {
            0.0
        };
        let mut out = vec![vec![0.0; self.kappa.len()]; ns];
        for c in 0..self.kappa.len() {
            if !self.mask[c] {
                continue;
            }
            let z = if d > 0 { self.cell_z(v, c, eta) } else { Vec::new() };
            for s in 0..ns {
                let m = self.base[c][s] + (0..d).map(|k| self.null[s * d + k] * z[k]).sum::<f64>();
                out[s][c] = m.max(0.0);
            }
        }
        let r = self.residual(&out);
        (out, r)
    }

    fn residual(&self, mu: &[Vec<f64>]) -> f64 {
        let mut worst = 0.0f64;
        let mut mass = 0.0;
        for (c, &k) in self.kappa.iter().enumerate() {
            let mut net = Vec2d::zero();
            for s in 0..self.ns {
                net = net + self.xi[s].scale(mu[s][c]);
                mass += mu[s][c];
            }
            worst = worst.max((net - k).norm());
        }
        worst.max((mass * self.h * self.h - 1.0).abs())
    }
}

fn grid_kappa(kappa: &NetBurgersField) -> Result<(BoundingBox, f64, usize, usize, &[Vec2d])> {
    match kappa {
        NetBurgersField::Grid { bbox, h, nx, ny, values } => Ok((*bbox, *h, *nx, *ny, values)),
        NetBurgersField::Atomic { .. } => {
            Err(Error::Domain("relaxation needs a grid net Burgers field".into()))
        }
    }
}

fn build_constraints(kappa: &NetBurgersField, species: &SpeciesSet) -> Result<Constraints> {
    let (bbox, h, nx, ny, values) = grid_kappa(kappa)?;
    let tv = kappa.total_variation();
    if tv > 1.0 + 1e-12 {
        return Err(Error::Infeasible(format!(
            "|kappa| has total mass {tv} > 1, but each unit of density carries at most a unit Burgers vector"
        )));
    }
    let ns = species.len();
    let xi: Vec<Vec2d> = species.vectors().to_vec();
    let mut mask: Vec<bool> = values.iter().map(|k| k.norm() > 0.0).collect();
    if bbox.contains(Vec2d::zero()) {
        let i = ((-bbox.x0 / h).floor() as usize).min(nx - 1);
        let j = ((-bbox.y0 / h).floor() as usize).min(ny - 1);
        mask[j * nx + i] = true;
    }
    let unbounded = has_null_cone(&xi);
    let (mut lo, mut hi) = (0.0, 0.0);
    for (c, &k) in values.iter().enumerate() {
        if !mask[c] {
            continue;
        }
        let Some((a, b)) = cell_mass_range(&xi, k, unbounded) else {
            return Err(Error::Infeasible(format!(
                "kappa = ({}, {}) in cell ({}, {}) is not a non-negative combination of the Burgers vectors",
                k.x,
                k.y,
                c % nx,
                c / nx
            )));
        };
        lo += a * h * h;
        hi += b * h * h;
    }
    if lo > 1.0 + 1e-10 || hi < 1.0 - 1e-10 {
        return Err(Error::Infeasible(format!(
            "admissible total mass lies in [{lo}, {hi}], which excludes 1"
        )));
    }

    let x = DMatrix::from_fn(2, ns, |r, s| if r == 0 { xi[s].x } else { xi[s].y });
    let xp = x
        .clone()
        .pseudo_inverse(1e-12)
        .map_err(|e| Error::Domain(format!("pseudo-inverse failed: {e}")))?;
    let pperp = DMatrix::<f64>::identity(ns, ns) - &xp * &x;
    let eig = SymmetricEigen::new(pperp);
    let cols: Vec<usize> = (0..ns).filter(|&k| eig.eigenvalues[k] > 0.5).collect();
    let d = cols.len();
    let null: Vec<f64> = (0..ns).flat_map(|s| cols.iter().map(move |&k| (s, k))).map(|(s, k)| eig.eigenvectors[(s, k)]).collect();
    let null_one: Vec<f64> = (0..d).map(|k| (0..ns).map(|s| null[s * d + k]).sum()).collect();
    let base = values
        .iter()
        .map(|k| (0..ns).map(|s| xp[(s, 0)] * k.x + xp[(s, 1)] * k.y).collect())
        .collect();
    Ok(Constraints { ns, h, xi, kappa: values.to_vec(), mask, null, d, null_one, base })
}

/// Grid relaxation of the continuum energy over decompositions of `κ`.
pub fn relaxed_energy(
    kappa: &NetBurgersField,
    species: &SpeciesSet,
    base: &KernelFamily,
    opts: &RelaxOptions,
) -> Result<RelaxResult> {
    if species.len() != base.species_count() {
        return Err(Error::Domain("species set does not match the kernel".into()));
    }
    let cons = build_constraints(kappa, species)?;
    let (bbox, h, nx, ny, _) = grid_kappa(kappa)?;
    let op = CellOperator::new(base, h, nx, ny, opts.grid)?;
    let comb = op.combined();
    let ns = cons.ns;
    let h2 = h * h;

    let eval = |mu: &[Vec<f64>]| -> (f64, Vec<Vec<f64>>) {
        let hats: Vec<_> = mu.iter().map(|v| op.transform(v)).collect();
        let am = op.apply(&hats, &comb);
        let mut q = 0.0;
        for s in 0..ns {
            for (a, b) in mu[s].iter().zip(&am[s]) {
                q += a * b;
            }
        }
        let grad = am.into_iter().map(|v| v.into_iter().map(|x| 2.0 * h2 * x).collect()).collect();
        (h2 * q, grad)
    };

    // Largest eigenvalue magnitude of the Hessian on the admissible cells.
    let mut v: Vec<Vec<f64>> = (0..ns).map(|_| cons.mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect()).collect();
    let mut lip = 0.0;
    for _ in 0..30 {
        let norm = v.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        v.iter_mut().flatten().for_each(|x| *x /= norm);
        let (_, mut w) = eval(&v);
        for row in w.iter_mut() {
            for (c, x) in row.iter_mut().enumerate() {
                if !cons.mask[c] {
                    *x = 0.0;
                }
            }
        }
        lip = w.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
        v = w;
    }
    let mut step = if lip > 0.0 { 1.0 / lip } else { 1.0 };

    // Accelerated projected gradient with function-value restart.
    let zero = vec![vec![0.0; nx * ny]; ns];
    let (mut mu, mut res) = cons.project(&zero);
    let (mut q, _) = eval(&mu);
    let mut extra = mu.clone();
    let (mut q_extra, mut grad_extra) = eval(&extra);
    let mut momentum = 1.0f64;
    let mut plain = true;
    let mut trace = vec![TraceRow { iteration: 0, objective: q, residual: res }];
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=opts.max_iterations {
        iterations = it;
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<Vec<f64>> = extra
                .iter()
                .zip(&grad_extra)
                .map(|(m, g)| m.iter().zip(g).map(|(a, b)| a - step * b).collect())
                .collect();
            let (y, r) = cons.project(&trial);
            let (qy, _) = eval(&y);
            let mut lin = 0.0;
            let mut dist2 = 0.0;
            for s in 0..ns {
                for c in 0..nx * ny {
                    let d = y[s][c] - extra[s][c];
                    lin += grad_extra[s][c] * d;
                    dist2 += d * d;
                }
            }
            if qy <= q_extra + lin + dist2 / (2.0 * step) + 1e-14 * q_extra.abs().max(1e-300) {
                accepted = Some((y, r, qy));
                break;
            }
            step *= 0.5;
        }
        let Some((y, r, qy)) = accepted else {
            break;
        };
        let scale = mu.iter().flatten().fold(1.0f64, |m, x| m.max(x.abs()));
        let moved = y
            .iter()
            .zip(&mu)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(u, w)| (u - w).abs()))
            .fold(0.0f64, f64::max);
        trace.push(TraceRow { iteration: it, objective: qy, residual: r });
        if qy > q {
            if plain {
                // A plain projected step no longer decreases the objective
                // beyond rounding: stationary to working precision.
                converged = res < opts.residual_tolerance;
                break;
            }
            // Restart from the current iterate without momentum.
            plain = true;
            momentum = 1.0;
            extra = mu.clone();
            (q_extra, grad_extra) = eval(&extra);
            continue;
        }
        let next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let beta = (momentum - 1.0) / next;
        plain = false;
        momentum = next;
        extra = y
            .iter()
            .zip(&mu)
            .map(|(a, b)| a.iter().zip(b).map(|(u, w)| u + beta * (u - w)).collect())
            .collect();
        // The extrapolated point may leave the feasible set; project it back.
        extra = cons.project(&extra).0;
        (q_extra, grad_extra) = eval(&extra);
        mu = y;
        q = qy;
        res = r;
        if moved <= opts.tolerance * scale && res < opts.residual_tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence { best: q, iterations });
    }
    let energy = op.breakdown(&mu);
    let minimizer = GridDensity::with_mass_tolerance(bbox, h, mu, 1e-8)?;
    Ok(RelaxResult { value: energy.total, energy, minimizer, residual: res, iterations, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::continuum_energy;
    use crate::measures::net_burgers_grid;

    #[test]
    fn mass_ranges() {
        let xi = [Vec2d::new(1.0, 0.0), Vec2d::new(-1.0, 0.0)];
        assert!(has_null_cone(&xi));
        assert_eq!(cell_mass_range(&xi, Vec2d::new(0.5, 0.0), true), Some((0.5, f64::INFINITY)));
        assert_eq!(cell_mass_range(&xi, Vec2d::new(0.0, 0.5), true), None);
        let tri: Vec<Vec2d> = (0..3).map(|k| Vec2d::unit(k as f64 * std::f64::consts::TAU / 3.0)).collect();
        assert!(has_null_cone(&tri));
        let two = [Vec2d::new(1.0, 0.0), Vec2d::new(0.0, 1.0)];
        assert!(!has_null_cone(&two));
        let (lo, hi) = cell_mass_range(&two, Vec2d::new(0.3, 0.4), false).unwrap();
        assert!((lo - 0.7).abs() < 1e-15 && (hi - 0.7).abs() < 1e-15);
    }

    #[test]
    fn single_species_reconstruction_is_forced() {
        let base = KernelFamily::log(&[1.0]).unwrap();
        let species = SpeciesSet::from_angles(&[0.0]).unwrap();
        let mu = GridDensity::truncated_gaussian(BoundingBox::square(0.5), 0.125, 0.3).unwrap();
        let kappa = net_burgers_grid(&mu, &species).unwrap();
        let r = relaxed_energy(&kappa, &species, &base, &RelaxOptions::default()).unwrap();
        let e = continuum_energy(&mu, &base, ContinuumGrid::default()).unwrap();
        assert!((r.value - e.total).abs() < 1e-10, "{} vs {}", r.value, e.total);
        assert!(r.residual < 1e-10);
        assert!(r.trace_csv().unwrap().starts_with("iteration,objective,residual"));
    }

    #[test]
    fn excess_net_mass_is_infeasible() {
        let base = KernelFamily::log(&[1.0]).unwrap();
        let species = SpeciesSet::from_angles(&[0.0]).unwrap();
        let kappa = NetBurgersField::Grid {
            bbox: BoundingBox::square(0.25),
            h: 0.25,
            nx: 2,
            ny: 2,
            values: vec![Vec2d::new(5.0, 0.0); 4],
        };
        assert!(matches!(
            relaxed_energy(&kappa, &species, &base, &RelaxOptions::default()),
            Err(Error::Infeasible(_))
        ));
    }
}

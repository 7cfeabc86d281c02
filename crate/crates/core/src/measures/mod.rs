//! Particle configurations, empirical and grid measures, and the net Burgers
//! field.

mod discretize;
mod grid;

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vec2d;

pub use discretize::{discretize, discretize_with_info, lattice_spacing, DiscretizeInfo};
pub use grid::{mollify_density, BoundingBox, GridDensity};

/// Burgers vectors `ξ_1, …, ξ_S`: unit and pairwise distinct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesSet {
    xi: Vec<Vec2d>,
}

impl SpeciesSet {
    pub fn new(xi: Vec<Vec2d>) -> Result<Self> {
        if xi.is_empty() {
            return Err(Error::Domain(
                "species set needs at least one vector".into(),
            ));
        }
        for (i, v) in xi.iter().enumerate() {
            if !v.is_finite() || (v.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::Domain(format!("xi_{i} is not a unit vector")));
            }
            if xi[..i].iter().any(|w| (*w - *v).norm() <= 1e-12) {
                return Err(Error::Domain(format!("xi_{i} repeats an earlier vector")));
            }
        }
        Ok(Self { xi })
    }

    /// `ξ_s = (cos φ_s, sin φ_s)`.
    pub fn from_angles(angles: &[f64]) -> Result<Self> {
        Self::new(angles.iter().map(|&a| Vec2d::unit(a)).collect())
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    pub fn xi(&self, s: usize) -> Vec2d {
        self.xi[s]
    }

    pub fn vectors(&self) -> &[Vec2d] {
        &self.xi
    }
}

/// `n` labelled particles grouped by species.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    species: SpeciesSet,
    positions: Vec<Vec<Vec2d>>,
}

impl Configuration {
    pub fn new(species: SpeciesSet, positions: Vec<Vec<Vec2d>>) -> Result<Self> {
        if positions.len() != species.len() {
            return Err(Error::Domain(format!(
                "{} position lists for {} species",
                positions.len(),
                species.len()
            )));
        }
        if positions.iter().all(|p| p.is_empty()) {
            return Err(Error::Domain(
                "configuration needs at least one particle".into(),
            ));
        }
        if positions.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Domain("particle positions must be finite".into()));
        }
        Ok(Self { species, positions })
    }

    /// Builds from `(species, position)` pairs.
    pub fn from_atoms(species: SpeciesSet, atoms: &[(usize, Vec2d)]) -> Result<Self> {
        let mut positions = vec![Vec::new(); species.len()];
        for &(s, x) in atoms {
            positions
                .get_mut(s)
                .ok_or_else(|| Error::Domain(format!("species index {s} out of range")))?
                .push(x);
        }
        Self::new(species, positions)
    }

    pub fn species(&self) -> &SpeciesSet {
        &self.species
    }

    pub fn positions(&self, s: usize) -> &[Vec2d] {
        &self.positions[s]
    }

    pub fn n(&self) -> usize {
        self.positions.iter().map(Vec::len).sum()
    }

    pub fn species_counts(&self) -> Vec<usize> {
        self.positions.iter().map(Vec::len).collect()
    }

    /// All atoms as `(species, position)`, grouped by species.
    pub fn atoms(&self) -> Vec<(usize, Vec2d)> {
        self.positions
            .iter()
            .enumerate()
            .flat_map(|(s, p)| p.iter().map(move |&x| (s, x)))
            .collect()
    }

    /// CSV with header `species_index,x,y`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let ser = |e: csv::Error| Error::Serialization(e.to_string());
        wr.write_record(["species_index", "x", "y"]).map_err(ser)?;
        for (s, x) in self.atoms() {
            wr.write_record([s.to_string(), x.x.to_string(), x.y.to_string()])
                .map_err(ser)?;
        }
        wr.flush().map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn read_csv<R: Read>(species: SpeciesSet, r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut atoms = Vec::new();
        for rec in rd.records() {
            let rec = rec.map_err(|e| Error::Serialization(e.to_string()))?;
            let field = |i: usize| {
                rec.get(i)
                    .ok_or_else(|| Error::Serialization("short CSV record".into()))
            };
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Serialization(e.to_string()))
            };
            let s: usize = field(0)?
                .trim()
                .parse()
                .map_err(|e: std::num::ParseIntError| Error::Serialization(e.to_string()))?;
            atoms.push((s, Vec2d::new(parse(field(1)?)?, parse(field(2)?)?)));
        }
        Self::from_atoms(species, &atoms)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("configuration serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s).map_err(|e| Error::Serialization(e.to_string()))?;
        Self::new(c.species, c.positions)
    }
}

/// `μ_n^s = (1/n) Σ_i δ_{x_i^s}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    config: Configuration,
}

impl EmpiricalMeasure {
    pub fn new(config: Configuration) -> Self {
        Self { config }
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.config.n() as f64
    }

    pub fn species_mass(&self, s: usize) -> f64 {
        self.config.positions(s).len() as f64 * self.weight()
    }

    pub fn total_mass(&self) -> f64 {
        (0..self.config.species().len())
            .map(|s| self.species_mass(s))
            .sum()
    }

    /// `⟨μ_n^s, f⟩`.
    pub fn integrate(&self, s: usize, f: impl Fn(Vec2d) -> f64) -> f64 {
        self.config.positions(s).iter().map(|&x| f(x)).sum::<f64>() * self.weight()
    }
}

/// `κ = Σ_s ξ_s μ^s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NetBurgersField {
    /// Point masses `w_i δ_{x_i}` with coincident points merged.
    Atomic {
        positions: Vec<Vec2d>,
        weights: Vec<Vec2d>,
    },
    /// Cell densities on a grid.
    Grid {
        bbox: BoundingBox,
        h: f64,
        nx: usize,
        ny: usize,
        values: Vec<Vec2d>,
    },
}

impl NetBurgersField {
    /// `|κ|(ℝ²)`.
    pub fn total_variation(&self) -> f64 {
        match self {
            Self::Atomic { weights, .. } => weights.iter().map(|w| w.norm()).sum(),
            Self::Grid { h, values, .. } => values.iter().map(|v| v.norm()).sum::<f64>() * h * h,
        }
    }
}

/// Atomic `κ_n = (1/n) Σ_s Σ_i ξ_s δ_{x_i^s}`.
pub fn net_burgers(config: &Configuration) -> NetBurgersField {
    let w = 1.0 / config.n() as f64;
    let mut index: HashMap<(u64, u64), usize> = HashMap::new();
    let mut positions = Vec::new();
    let mut weights: Vec<Vec2d> = Vec::new();
    for (s, x) in config.atoms() {
        let key = ((x.x + 0.0).to_bits(), (x.y + 0.0).to_bits());
        let v = config.species().xi(s).scale(w);
        match index.get(&key) {
            Some(&i) => weights[i] = weights[i] + v,
            None => {
                index.insert(key, positions.len());
                positions.push(x);
                weights.push(v);
            }
        }
    }
    NetBurgersField::Atomic { positions, weights }
}

/// Grid `κ = Σ_s ξ_s μ^s`.
pub fn net_burgers_grid(mu: &GridDensity, species: &SpeciesSet) -> Result<NetBurgersField> {
    if species.len() != mu.species_count() {
        return Err(Error::Domain(
            "species set does not match the density".into(),
        ));
    }
    let mut values = vec![Vec2d::zero(); mu.nx() * mu.ny()];
    for s in 0..mu.species_count() {
        let xi = species.xi(s);
        for (v, &m) in values.iter_mut().zip(mu.values(s)) {
            *v = *v + xi.scale(m);
        }
    }
    Ok(NetBurgersField::Grid {
        bbox: mu.bbox(),
        h: mu.h(),
        nx: mu.nx(),
        ny: mu.ny(),
        values,
    })
}

/// Smallest distance between two distinct atoms, across species.
pub fn min_separation(config: &Configuration) -> Result<f64> {
    let mut pts: Vec<Vec2d> = config.atoms().into_iter().map(|a| a.1).collect();
    if pts.len() < 2 {
        return Err(Error::Domain(
            "min_separation needs at least two atoms".into(),
        ));
    }
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    let mut best = f64::INFINITY;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            if pts[j].x - pts[i].x >= best {
                break;
            }
            best = best.min((pts[j] - pts[i]).norm());
        }
    }
    Ok(best)
}

/// Whether all atom positions are pairwise distinct.
pub fn in_d_circ(config: &Configuration) -> bool {
    config.n() < 2 || min_separation(config).map_or(false, |d| d > 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one() -> SpeciesSet {
        SpeciesSet::from_angles(&[0.0]).unwrap()
    }

    #[test]
    fn species_validation() {
        assert!(SpeciesSet::new(vec![Vec2d::new(1.0, 0.0), Vec2d::new(1.0, 0.0)]).is_err());
        assert!(SpeciesSet::new(vec![Vec2d::new(2.0, 0.0)]).is_err());
        assert!(SpeciesSet::new(vec![]).is_err());
    }

    #[test]
    fn separation_examples() {
        let c = Configuration::from_atoms(one(), &[(0, Vec2d::zero()), (0, Vec2d::new(3.0, 4.0))])
            .unwrap();
        assert_eq!(min_separation(&c).unwrap(), 5.0);
        let single = Configuration::from_atoms(one(), &[(0, Vec2d::zero())]).unwrap();
        assert!(min_separation(&single).is_err());
        assert!(in_d_circ(&c));
    }

    #[test]
    fn coincident_species_are_not_in_domain() {
        let sp = SpeciesSet::from_angles(&[0.0, 1.0]).unwrap();
        let c =
            Configuration::from_atoms(sp, &[(0, Vec2d::new(0.5, 0.5)), (1, Vec2d::new(0.5, 0.5))])
                .unwrap();
        assert_eq!(min_separation(&c).unwrap(), 0.0);
        assert!(!in_d_circ(&c));
    }

    #[test]
    fn csv_and_json_round_trip() {
        let sp = SpeciesSet::from_angles(&[0.0, 2.0]).unwrap();
        let c = Configuration::from_atoms(
            sp.clone(),
            &[(0, Vec2d::new(0.1, -0.3)), (1, Vec2d::new(1.0 / 3.0, 2.5))],
        )
        .unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("species_index,x,y\n"));
        assert_eq!(Configuration::read_csv(sp, &buf[..]).unwrap(), c);
        assert_eq!(Configuration::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn net_burgers_cancels_antipodal_pairs() {
        let sp = SpeciesSet::from_angles(&[0.0, std::f64::consts::PI]).unwrap();
        let x = Vec2d::new(0.2, 0.1);
        let c = Configuration::from_atoms(sp, &[(0, x), (1, x)]).unwrap();
        assert!(net_burgers(&c).total_variation() < 1e-15);
    }
}

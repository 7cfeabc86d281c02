use std::f64::consts::TAU;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::elastic::{sqrt_apply_sym, strain_kernel_polar, BurgersAngle, LameParameters};
use crate::kernels::lens::{
    canonical_pair, edge_v_reg, EdgeRegTable, EdgeTableSpec, LensQuadrature,
};
use crate::kernels::potentials::{edge_potential, log_potential, riesz_potential};
use crate::kernels::riesz;
use crate::quadrature::{two_center, Constraint, Estimate, PolarRule};
use crate::tables::{clustered_knots, PiecewiseSpline};
use crate::Vec2d;

pub const KERNELSPEC_VERSION: &str = "kernelspec-1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyTag {
    Edge,
    Riesz,
    Log,
}

/// Resolution of the lazily built `V_reg` tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableSpec {
    pub radial: usize,
    pub angular: usize,
    pub quad_tol: f64,
}

impl TableSpec {
    pub fn default_for(tag: FamilyTag) -> Self {
        match tag {
            FamilyTag::Edge => {
                let e = EdgeTableSpec::default();
                Self {
                    radial: e.radial,
                    angular: e.angular,
                    quad_tol: e.quad_tol,
                }
            }
            FamilyTag::Riesz => Self {
                radial: 400,
                angular: 1,
                quad_tol: 1e-9,
            },
            FamilyTag::Log => Self {
                radial: 400,
                angular: 1,
                quad_tol: 1e-10,
            },
        }
    }
}

#[derive(Debug)]
struct EdgeData {
    lame: LameParameters<f64>,
    angles: Vec<BurgersAngle<f64>>,
    /// `(table index, rotation)` per ordered species pair.
    pairs: Vec<(usize, f64)>,
    deltas: Vec<f64>,
    tables: OnceLock<Vec<EdgeRegTable>>,
}

#[derive(Debug)]
struct RieszData {
    a: f64,
    b: f64,
    c_prime: f64,
    table: OnceLock<PiecewiseSpline>,
}

#[derive(Debug)]
struct LogData {
    charges: Vec<f64>,
    table: OnceLock<PiecewiseSpline>,
}

#[derive(Debug)]
enum Inner {
    Edge(EdgeData),
    Riesz(RieszData),
    Log(LogData),
}

/// A multi-species potential `V^{st}` with its decomposition
/// `V^{st} = Σ_k W̄_k^s ∗ W_k^t + V_reg^{st}`.
#[derive(Debug, Clone)]
pub struct KernelFamily {
    inner: Arc<Inner>,
    tables: TableSpec,
}

impl KernelFamily {
    /// Edge dislocations, one species per Burgers angle.
    pub fn edge(lame: LameParameters<f64>, angles: &[f64]) -> Result<Self> {
        LameParameters::new(lame.lambda, lame.mu)?;
        if angles.is_empty() {
            return Err(Error::Domain(
                "edge family needs at least one Burgers angle".into(),
            ));
        }
        let angles: Vec<_> = angles.iter().map(|&p| BurgersAngle::new(p)).collect();
        let mut deltas: Vec<f64> = Vec::new();
        let mut pairs = Vec::new();
        for s in &angles {
            for t in &angles {
                let (delta, rot) = canonical_pair(s.phi(), t.phi());
                let idx = match deltas.iter().position(|d| (d - delta).abs() < 1e-14) {
                    Some(i) => i,
                    None => {
                        deltas.push(delta);
                        deltas.len() - 1
                    }
                };
                pairs.push((idx, rot));
            }
        }
        let inner = Inner::Edge(EdgeData {
            lame,
            angles,
            pairs,
            deltas,
            tables: OnceLock::new(),
        });
        Ok(Self {
            inner: Arc::new(inner),
            tables: TableSpec::default_for(FamilyTag::Edge),
        })
    }

    /// Two species with signs `(−1)^s`, `V^{st} = (−1)^{s+t} |x|^{−a}`; the
    /// constant `C′` is calibrated by quadrature.
    pub fn riesz(a: f64) -> Result<Self> {
        Self::check_riesz(a)?;
        let b = 1.0 + 0.5 * a;
        let k = riesz::composition_constant(b, &PolarRule::with_tol(1e-11));
        Self::riesz_with_constant(a, 1.0 / k.value)
    }

    /// Riesz family with a previously calibrated `C′`.
    pub fn riesz_with_constant(a: f64, c_prime: f64) -> Result<Self> {
        Self::check_riesz(a)?;
        if !(c_prime > 0.0 && c_prime.is_finite()) {
            return Err(Error::Domain(format!("C' must be positive, got {c_prime}")));
        }
        let inner = Inner::Riesz(RieszData {
            a,
            b: 1.0 + 0.5 * a,
            c_prime,
            table: OnceLock::new(),
        });
        Ok(Self {
            inner: Arc::new(inner),
            tables: TableSpec::default_for(FamilyTag::Riesz),
        })
    }

    fn check_riesz(a: f64) -> Result<()> {
        if !(a > 0.0 && a < 2.0) {
            return Err(Error::Domain(format!(
                "Riesz exponent must lie in (0, 2), got {a}"
            )));
        }
        Ok(())
    }

    /// Logarithmic particles with charges `q_s`, `V^{st} = −q_s q_t log|x|`.
    pub fn log(charges: &[f64]) -> Result<Self> {
        if charges.is_empty() || charges.iter().any(|q| !q.is_finite() || *q == 0.0) {
            return Err(Error::Domain(
                "log family needs finite non-zero charges".into(),
            ));
        }
        let inner = Inner::Log(LogData {
            charges: charges.to_vec(),
            table: OnceLock::new(),
        });
        Ok(Self {
            inner: Arc::new(inner),
            tables: TableSpec::default_for(FamilyTag::Log),
        })
    }

    /// Overrides the `V_reg` table resolution (before first use).
    pub fn with_tables(mut self, spec: TableSpec) -> Self {
        self.inner = Arc::new(match &*self.inner {
            Inner::Edge(e) => Inner::Edge(EdgeData {
                lame: e.lame,
                angles: e.angles.clone(),
                pairs: e.pairs.clone(),
                deltas: e.deltas.clone(),
                tables: OnceLock::new(),
            }),
            Inner::Riesz(r) => Inner::Riesz(RieszData {
                a: r.a,
                b: r.b,
                c_prime: r.c_prime,
                table: OnceLock::new(),
            }),
            Inner::Log(l) => Inner::Log(LogData {
                charges: l.charges.clone(),
                table: OnceLock::new(),
            }),
        });
        self.tables = spec;
        self
    }

    pub fn tag(&self) -> FamilyTag {
        match &*self.inner {
            Inner::Edge(_) => FamilyTag::Edge,
            Inner::Riesz(_) => FamilyTag::Riesz,
            Inner::Log(_) => FamilyTag::Log,
        }
    }

    pub fn species_count(&self) -> usize {
        match &*self.inner {
            Inner::Edge(e) => e.angles.len(),
            Inner::Riesz(_) => 2,
            Inner::Log(l) => l.charges.len(),
        }
    }

    /// Number `𝖪` of profile functions per species.
    pub fn component_count(&self) -> usize {
        match &*self.inner {
            Inner::Edge(_) => 4,
            Inner::Riesz(_) => 1,
            Inner::Log(_) => 2,
        }
    }

    pub fn lame(&self) -> Option<LameParameters<f64>> {
        match &*self.inner {
            Inner::Edge(e) => Some(e.lame),
            _ => None,
        }
    }

    pub fn burgers_angles(&self) -> Option<Vec<f64>> {
        match &*self.inner {
            Inner::Edge(e) => Some(e.angles.iter().map(|a| a.phi()).collect()),
            _ => None,
        }
    }

    /// Riesz exponent `a`.
    pub fn riesz_exponent(&self) -> Option<f64> {
        match &*self.inner {
            Inner::Riesz(r) => Some(r.a),
            _ => None,
        }
    }

    /// Calibrated Riesz constant `C′`.
    pub fn riesz_constant(&self) -> Option<f64> {
        match &*self.inner {
            Inner::Riesz(r) => Some(r.c_prime),
            _ => None,
        }
    }

    pub fn charges(&self) -> Option<Vec<f64>> {
        match &*self.inner {
            Inner::Log(l) => Some(l.charges.clone()),
            _ => None,
        }
    }

    /// Sign or charge multiplying species `s` in the radial families.
    pub(crate) fn weight(&self, s: usize) -> f64 {
        match &*self.inner {
            Inner::Edge(_) => 1.0,
            Inner::Riesz(_) => {
                if s == 0 {
                    -1.0
                } else {
                    1.0
                }
            }
            Inner::Log(l) => l.charges[s],
        }
    }

    pub(crate) fn check_species(&self, s: usize, t: usize) -> Result<()> {
        let n = self.species_count();
        if s >= n || t >= n {
            return Err(Error::Domain(format!(
                "species ({s}, {t}) out of range for S = {n}"
            )));
        }
        Ok(())
    }

    /// `V^{st}(x)` for `x ≠ 0`.
    pub fn potential(&self, s: usize, t: usize, x: Vec2d) -> Result<f64> {
        self.check_species(s, t)?;
        match &*self.inner {
            Inner::Edge(e) => edge_potential(x, e.angles[s], e.angles[t]),
            Inner::Riesz(r) => Ok(self.weight(s) * self.weight(t) * riesz_potential(x, r.a)?),
            Inner::Log(_) => Ok(self.weight(s) * self.weight(t) * log_potential(x)?),
        }
    }

    /// Radius of the closed ball containing every profile's support.
    pub fn profile_support(&self) -> f64 {
        match &*self.inner {
            Inner::Riesz(_) => 2.0,
            _ => 1.0,
        }
    }

    /// Exponent `p` of the profiles' `|x|^{−p}` singularity at 0.
    pub fn profile_singularity(&self) -> f64 {
        match &*self.inner {
            Inner::Riesz(r) => r.b,
            _ => 1.0,
        }
    }

    /// Circles (about the profile centre) where profiles have kinks or jumps.
    pub fn profile_kinks(&self) -> Vec<f64> {
        match &*self.inner {
            Inner::Riesz(_) => vec![1.0, 2.0],
            _ => vec![1.0],
        }
    }

    /// All `𝖪` profiles `W_k^s(z)` written into `out`; zero at `z = 0` and
    /// outside the support.
    pub fn profiles(&self, s: usize, z: Vec2d, out: &mut [f64]) {
        let r = z.norm();
        out.iter_mut().for_each(|v| *v = 0.0);
        if r == 0.0 || r > self.profile_support() {
            return;
        }
        match &*self.inner {
            Inner::Edge(e) => {
                let k = strain_kernel_polar(r, z.angle(), e.angles[s].phi(), &e.lame);
                let d = sqrt_apply_sym(&k.sym(), &e.lame);
                let inv = 1.0 / e.lame.prefactor().sqrt();
                for (o, v) in out.iter_mut().zip(d.entries()) {
                    *o = v * inv;
                }
            }
            Inner::Riesz(rz) => {
                out[0] = self.weight(s) * rz.c_prime.sqrt() * r.powf(-rz.b) * riesz::cutoff(r);
            }
            Inner::Log(l) => {
                let c = l.charges[s] / (TAU.sqrt() * r * r);
                out[0] = c * z.x;
                out[1] = c * z.y;
            }
        }
    }

    pub fn profile(&self, k: usize, s: usize, z: Vec2d) -> f64 {
        let mut buf = [0.0; 4];
        self.profiles(s, z, &mut buf[..self.component_count()]);
        buf[k]
    }

    /// Smallest `C` with `|W_k^s(x)| ≤ C/|x|` on the unit ball, when such a
    /// bound exists (edge and log families).
    pub fn profile_bound(&self) -> Option<f64> {
        match &*self.inner {
            Inner::Riesz(_) => None,
            Inner::Log(l) => {
                Some(l.charges.iter().fold(0.0f64, |m, q| m.max(q.abs())) / TAU.sqrt())
            }
            Inner::Edge(e) => {
                let mut buf = [0.0; 4];
                let mut best = 0.0f64;
                for s in 0..e.angles.len() {
                    for i in 0..7200 {
                        let z = Vec2d::unit(i as f64 * TAU / 7200.0);
                        self.profiles(s, z, &mut buf);
                        best = buf.iter().fold(best, |m, v| m.max(v.abs()));
                    }
                }
                // Margin for the angular sampling of a trigonometric polynomial.
                Some(best * (1.0 + 1e-3))
            }
        }
    }

    /// `V_reg^{st}(x)` from the tabulated decomposition; continuous at 0.
    pub fn v_reg(&self, s: usize, t: usize, x: Vec2d) -> f64 {
        match &*self.inner {
            Inner::Edge(e) => {
                let tables = self.edge_tables(e);
                let n = e.angles.len();
                let (idx, rot) = e.pairs[s * n + t];
                tables[idx].eval(x.rotate(rot))
            }
            Inner::Riesz(r) => {
                let w = self.weight(s) * self.weight(t);
                let rr = x.norm();
                if rr >= 4.0 {
                    return w * rr.powf(-r.a);
                }
                w * self.riesz_table(r).eval(rr)
            }
            Inner::Log(l) => {
                let w = l.charges[s] * l.charges[t];
                let rr = x.norm();
                if rr >= 2.0 {
                    return -w * rr.ln();
                }
                w * self.log_table().eval(rr)
            }
        }
    }

    /// `V^{st}(x) − V_reg^{st}(x) = Σ_k (W̄_k^s ∗ W_k^t)(x)` via the tables.
    pub fn conv(&self, s: usize, t: usize, x: Vec2d) -> Result<f64> {
        Ok(self.potential(s, t, x)? - self.v_reg(s, t, x))
    }

    /// `V_reg^{st}(x)` computed directly by quadrature (no table).
    pub fn v_reg_direct(&self, s: usize, t: usize, x: Vec2d, tol: f64) -> Result<f64> {
        self.check_species(s, t)?;
        match &*self.inner {
            Inner::Edge(e) => edge_v_reg(
                x,
                e.angles[s],
                e.angles[t],
                &e.lame,
                &LensQuadrature::with_tol(tol),
            ),
            Inner::Riesz(r) => {
                let w = self.weight(s) * self.weight(t);
                Ok(w * r.c_prime
                    * riesz::remainder_integral(x.norm(), r.b, &PolarRule::with_tol(tol)))
            }
            Inner::Log(l) => {
                let w = l.charges[s] * l.charges[t];
                let rr = x.norm();
                if rr == 0.0 {
                    return Ok(0.0);
                }
                let c = log_conv(rr, &PolarRule::with_tol(tol));
                Ok(w * (-rr.ln() - c.value))
            }
        }
    }

    /// `Σ_k (W̄_k^s ∗ W_k^t)(x)` by direct quadrature of the profile products.
    pub fn conv_direct(&self, s: usize, t: usize, x: Vec2d, tol: f64) -> Result<Estimate> {
        self.check_species(s, t)?;
        if x.norm() == 0.0 {
            return Err(Error::Domain("profile correlation is singular at 0".into()));
        }
        let r = self.profile_support();
        let p = self.profile_singularity();
        let kk = self.component_count();
        let common = [Constraint::disc(Vec2d::zero(), r), Constraint::disc(x, r)];
        let kinks: Vec<(Vec2d, f64)> = self
            .profile_kinks()
            .into_iter()
            .filter(|k| *k < r)
            .flat_map(|k| [(Vec2d::zero(), k), (x, k)])
            .collect();
        let rule = PolarRule::with_tol(tol);
        Ok(two_center(
            Vec2d::zero(),
            p,
            x,
            p,
            &common,
            &[],
            &[],
            &kinks,
            None,
            &rule,
            |u| {
                let mut a = [0.0; 4];
                let mut b = [0.0; 4];
                self.profiles(s, u - x, &mut a[..kk]);
                self.profiles(t, u, &mut b[..kk]);
                a[..kk].iter().zip(&b[..kk]).map(|(p, q)| p * q).sum()
            },
        ))
    }

    /// Canonical table index and rotation of the edge pair `(s, t)`.
    pub(crate) fn edge_canonical(&self, s: usize, t: usize) -> Option<(usize, f64)> {
        match &*self.inner {
            Inner::Edge(e) => Some(e.pairs[s * e.angles.len() + t]),
            _ => None,
        }
    }

    /// Canonical angle differences `Δ` of the edge tables.
    pub(crate) fn edge_deltas(&self) -> Vec<f64> {
        match &*self.inner {
            Inner::Edge(e) => e.deltas.clone(),
            _ => Vec::new(),
        }
    }

    /// `V_reg(d; 0, Δ_idx)` from the edge tables.
    pub(crate) fn edge_table_value(&self, idx: usize, d: Vec2d) -> f64 {
        let Inner::Edge(e) = &*self.inner else {
            panic!("not an edge family")
        };
        self.edge_tables(e)[idx].eval(d)
    }

    /// Builds all lazily tabulated data now.
    pub fn prepare(&self) {
        let _ = self.v_reg(0, 0, Vec2d::new(0.5, 0.0));
    }

    fn edge_tables<'a>(&self, e: &'a EdgeData) -> &'a Vec<EdgeRegTable> {
        e.tables.get_or_init(|| {
            let spec = EdgeTableSpec {
                radial: self.tables.radial,
                angular: self.tables.angular,
                quad_tol: self.tables.quad_tol,
            };
            e.deltas
                .iter()
                .map(|&d| EdgeRegTable::build(d, &e.lame, &spec).expect("valid Lamé parameters"))
                .collect()
        })
    }

    fn riesz_table<'a>(&self, r: &'a RieszData) -> &'a PiecewiseSpline {
        r.table.get_or_init(|| {
            riesz::build_reg_table(r.a, r.c_prime, self.tables.radial, self.tables.quad_tol)
        })
    }

    fn log_table(&self) -> &PiecewiseSpline {
        let Inner::Log(l) = &*self.inner else {
            unreachable!()
        };
        l.table.get_or_init(|| {
            let n = self.tables.radial;
            let rule = PolarRule::with_tol(self.tables.quad_tol);
            let xs = clustered_knots(2.0, n, &[1.0], 12);
            let ys: Vec<f64> = xs
                .par_iter()
                .map(|&r| match r {
                    r if r == 0.0 => 0.0,
                    r if r >= 2.0 => -r.ln(),
                    r => -r.ln() - log_conv(r, &rule).value,
                })
                .collect();
            PiecewiseSpline::new(xs, ys, &[1.0])
        })
    }

    /// JSON-serializable descriptor.
    pub fn descriptor(&self) -> KernelSpec {
        let mut spec = KernelSpec {
            version: KERNELSPEC_VERSION.to_string(),
            family: self.tag(),
            parameters: FamilyParameters::default(),
            species: Vec::new(),
            normalization: Normalization::default(),
            quadrature: self.tables,
        };
        match &*self.inner {
            Inner::Edge(e) => {
                spec.parameters.lambda = Some(e.lame.lambda);
                spec.parameters.mu = Some(e.lame.mu);
                spec.species = e.angles.iter().map(|a| a.phi()).collect();
                spec.normalization.stress_prefactor = Some(e.lame.prefactor());
            }
            Inner::Riesz(r) => {
                spec.parameters.a = Some(r.a);
                spec.species = vec![-1.0, 1.0];
                spec.normalization.c_prime = Some(r.c_prime);
            }
            Inner::Log(l) => {
                spec.species = l.charges.clone();
                spec.normalization.profile_scale = Some(1.0 / TAU.sqrt());
            }
        }
        spec
    }
}

/// `(1/2π) ∫_{B(0,1)∩B(d,1)} (u−d)·u / (|u−d|²|u|²) du` at `d = (r, 0)`.
fn log_conv(r: f64, rule: &PolarRule) -> Estimate {
    let d = Vec2d::new(r, 0.0);
    let common = [
        Constraint::disc(Vec2d::zero(), 1.0),
        Constraint::disc(d, 1.0),
    ];
    two_center(
        Vec2d::zero(),
        1.0,
        d,
        1.0,
        &common,
        &[],
        &[],
        &[],
        None,
        rule,
        |u| {
            let w = u - d;
            let (a, b) = (u.norm_sq(), w.norm_sq());
            if a == 0.0 || b == 0.0 {
                0.0
            } else {
                w.dot(u) / (a * b) / TAU
            }
        },
    )
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FamilyParameters {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub a: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stress_prefactor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub c_prime: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub profile_scale: Option<f64>,
}

/// Versioned kernel descriptor.
///
/// `species` holds Burgers angles (edge), signs (Riesz) or charges (log).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub version: String,
    pub family: FamilyTag,
    #[serde(default)]
    pub parameters: FamilyParameters,
    #[serde(default)]
    pub species: Vec<f64>,
    #[serde(default)]
    pub normalization: Normalization,
    pub quadrature: TableSpec,
}

impl KernelSpec {
    pub fn build(&self) -> Result<KernelFamily> {
        if self.version != KERNELSPEC_VERSION {
            return Err(Error::Serialization(format!(
                "unsupported kernel descriptor version {:?}",
                self.version
            )));
        }
        let fam = match self.family {
            FamilyTag::Edge => {
                let lame = LameParameters::new(
                    self.parameters.lambda.unwrap_or(1.0),
                    self.parameters.mu.unwrap_or(1.0),
                )?;
                let angles = if self.species.is_empty() {
                    vec![0.0]
                } else {
                    self.species.clone()
                };
                KernelFamily::edge(lame, &angles)?
            }
            FamilyTag::Riesz => {
                let a = self.parameters.a.ok_or_else(|| {
                    Error::Serialization("Riesz descriptor needs parameters.a".into())
                })?;
                match self.normalization.c_prime {
                    Some(c) => KernelFamily::riesz_with_constant(a, c)?,
                    None => KernelFamily::riesz(a)?,
                }
            }
            FamilyTag::Log => {
                let q = if self.species.is_empty() {
                    vec![1.0]
                } else {
                    self.species.clone()
                };
                KernelFamily::log(&q)?
            }
        };
        Ok(fam.with_tables(self.quadrature))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("descriptor serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Serialization(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn riesz_profile_signs() {
        let f = KernelFamily::riesz_with_constant(1.0, 1.0).unwrap();
        let z = Vec2d::new(0.5, 0.0);
        assert!(f.profile(0, 0, z) < 0.0 && f.profile(0, 1, z) > 0.0);
        assert_eq!(f.profile(0, 1, Vec2d::new(2.5, 0.0)), 0.0);
    }

    #[test]
    fn potential_matrix_signs() {
        let f = KernelFamily::riesz_with_constant(1.0, 1.0).unwrap();
        let x = Vec2d::new(0.5, 0.2);
        assert!(f.potential(0, 1, x).unwrap() < 0.0);
        assert!(f.potential(1, 1, x).unwrap() > 0.0);
        assert!(f.potential(2, 1, x).is_err());
    }

    #[test]
    fn descriptor_round_trip() {
        let f = KernelFamily::edge(LameParameters::default(), &[0.0, PI]).unwrap();
        let json = f.descriptor().to_json();
        let back = KernelSpec::from_json(&json).unwrap().build().unwrap();
        assert_eq!(back.descriptor(), f.descriptor());
        assert!(json.contains("kernelspec-1"));
    }
}

//! δ-indexed regularizations `V_δ^{st} = Σ_k W̄_{δ,k}^s ∗ W_{δ,k}^t + V_reg^{δ,st}`.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{riesz, FamilyTag, KernelFamily, KernelSpec, LameParameters};
use crate::quadrature::{gauss_legendre, two_center, Constraint, PolarRegion, PolarRule};
use crate::regularize::mollifier::Mollifier;
use crate::tables::{refined_knots, PiecewiseSpline, PolarTable};
use crate::Vec2d;

/// Dominator exponent `ε` of the core cut-off family, `U ∝ |x|^{−2ε}`.
pub const CUTOFF_EPSILON: f64 = 0.25;

const TABLE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegFamily {
    Mollified,
    CoreCutoff,
    FromBelow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FromBelowVariant {
    /// `W_δ = (|x| + δ)^{−b} ψ`.
    Shifted,
    /// `W_δ = W` outside `B(0,δ)`, tangent-line extension inside.
    AffineCap,
}

/// A regularization family, independent of `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RegularizerSpec {
    pub reg_family: RegFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<FromBelowVariant>,
}

impl RegularizerSpec {
    pub fn mollified() -> Self {
        Self {
            reg_family: RegFamily::Mollified,
            variant: None,
        }
    }

    pub fn core_cutoff() -> Self {
        Self {
            reg_family: RegFamily::CoreCutoff,
            variant: None,
        }
    }

    pub fn from_below(variant: FromBelowVariant) -> Self {
        Self {
            reg_family: RegFamily::FromBelow,
            variant: Some(variant),
        }
    }

    pub fn build(&self, base: &KernelFamily, delta: f64) -> Result<RegularizedKernel> {
        match self.reg_family {
            RegFamily::Mollified => mollify_kernel(base, delta),
            RegFamily::CoreCutoff => cutoff_kernel(base, delta),
            RegFamily::FromBelow => {
                let a = base.riesz_exponent().ok_or_else(|| {
                    Error::Domain("from-below regularization needs a Riesz family".into())
                })?;
                let v = self.variant.unwrap_or(FromBelowVariant::Shifted);
                frombelow_riesz_with(base, a, delta, v)
            }
        }
    }
}

/// JSON descriptor of a regularized kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegDescriptor {
    pub kernel: KernelSpec,
    pub reg_family: RegFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<FromBelowVariant>,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mollifier_profile: Option<String>,
    pub dominator: String,
}

#[derive(Debug)]
enum Tabulated {
    /// One polar table per canonical edge pair.
    Polar(Vec<PolarTable>),
    /// Radial table for unit weights.
    Radial(PiecewiseSpline),
}

#[derive(Debug)]
struct Mollified {
    /// `R(t) = (Φ ∗ |·|^{−a})(t e₁)` on `[0, 4]` (Riesz only).
    riesz: Option<Arc<PiecewiseSpline>>,
    vreg: OnceLock<Tabulated>,
    /// Radius beyond which `Φ_δ ∗ V_reg = V_δ`.
    reach: f64,
}

#[derive(Debug)]
struct Cutoff {
    conv: OnceLock<Tabulated>,
    c_tilde: f64,
    vreg_sup: OnceLock<f64>,
}

#[derive(Debug)]
struct FromBelow {
    variant: FromBelowVariant,
    b: f64,
    /// `C′ (w_δ ∗ w_δ)(r)` on `[0, 4]`.
    conv: PiecewiseSpline,
}

#[derive(Debug)]
enum Inner {
    Mollified(Mollified),
    Cutoff(Cutoff),
    FromBelow(FromBelow),
}

/// A regularized potential at one scale `δ`.
#[derive(Debug, Clone)]
pub struct RegularizedKernel {
    base: KernelFamily,
    delta: f64,
    inner: Arc<Inner>,
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Domain(format!(
            "delta must be positive, got {delta}"
        )));
    }
    Ok(())
}

/// `V_δ = Φ_δ ∗ V`, `W_{δ,k} = φ_δ ∗ W_k`, `V_reg^δ = Φ_δ ∗ V_reg`.
pub fn mollify_kernel(base: &KernelFamily, delta: f64) -> Result<RegularizedKernel> {
    check_delta(delta)?;
    let riesz = base.riesz_exponent().map(riesz_mollified_profile);
    let reach = match base.tag() {
        FamilyTag::Riesz => 4.0,
        _ => 2.0,
    } + 2.0 * delta;
    let inner = Inner::Mollified(Mollified {
        riesz,
        vreg: OnceLock::new(),
        reach,
    });
    Ok(RegularizedKernel {
        base: base.clone(),
        delta,
        inner: Arc::new(inner),
    })
}

/// Profiles cut off inside `B(0, δ)`; needs the `C/|x|` profile bound.
pub fn cutoff_kernel(base: &KernelFamily, delta: f64) -> Result<RegularizedKernel> {
    check_delta(delta)?;
    if delta >= 1.0 {
        return Err(Error::Domain(format!(
            "cut-off radius must lie in (0, 1), got {delta}"
        )));
    }
    let c = base
        .profile_bound()
        .ok_or_else(|| Error::Domain("core cut-off needs profiles bounded by C/|x|".into()))?;
    let p = 1.0 + CUTOFF_EPSILON;
    let kappa = riesz::composition_constant(p, &PolarRule::with_tol(1e-10)).value;
    let c_tilde = base.component_count() as f64 * c * c * kappa;
    let inner = Inner::Cutoff(Cutoff {
        conv: OnceLock::new(),
        c_tilde,
        vreg_sup: OnceLock::new(),
    });
    Ok(RegularizedKernel {
        base: base.clone(),
        delta,
        inner: Arc::new(inner),
    })
}

/// Riesz profiles approximated from below; builds its own Riesz family.
pub fn frombelow_riesz(a: f64, delta: f64, variant: FromBelowVariant) -> Result<RegularizedKernel> {
    let base = KernelFamily::riesz(a)?;
    frombelow_riesz_with(&base, a, delta, variant)
}

fn frombelow_riesz_with(
    base: &KernelFamily,
    a: f64,
    delta: f64,
    variant: FromBelowVariant,
) -> Result<RegularizedKernel> {
    check_delta(delta)?;
    if base.riesz_exponent() != Some(a) {
        return Err(Error::Domain(
            "base family does not match the Riesz exponent".into(),
        ));
    }
    let b = 1.0 + 0.5 * a;
    let c_prime = base.riesz_constant().expect("Riesz family");
    let conv = frombelow_table(b, c_prime, delta, variant);
    let inner = Inner::FromBelow(FromBelow { variant, b, conv });
    Ok(RegularizedKernel {
        base: base.clone(),
        delta,
        inner: Arc::new(inner),
    })
}

/// Radial from-below profile without sign or `√C′`.
fn frombelow_profile(r: f64, b: f64, delta: f64, variant: FromBelowVariant) -> f64 {
    let psi = riesz::cutoff(r);
    if psi == 0.0 {
        return 0.0;
    }
    match variant {
        FromBelowVariant::Shifted => (r + delta).powf(-b) * psi,
        FromBelowVariant::AffineCap => {
            if r > delta {
                r.powf(-b) * psi
            } else {
                delta.powf(-b) * (1.0 + b - b * r / delta) * psi
            }
        }
    }
}

fn frombelow_table(b: f64, c_prime: f64, delta: f64, variant: FromBelowVariant) -> PiecewiseSpline {
    let w = |r: f64| frombelow_profile(r, b, delta, variant);
    let step = (delta / 8.0).min(0.05);
    let mut zones = vec![(0.0, 4.0 * delta, step)];
    for c in [
        2.0 * delta,
        1.0 - delta,
        1.0,
        1.0 + delta,
        2.0 - delta,
        2.0,
        2.0 + delta,
        3.0,
    ] {
        zones.push((c, 2.0 * step, step / 2.0));
    }
    let knots = refined_knots(4.0, 400, &zones, &[]);
    let rule = PolarRule::with_tol(TABLE_TOL);
    let g = gauss_legendre(24);
    let vals: Vec<f64> = knots
        .par_iter()
        .map(|&r| {
            if r == 0.0 {
                let mut s = 0.0;
                for (lo, hi) in [(0.0, delta.min(1.0)), (delta.min(1.0), 1.0), (1.0, 2.0)] {
                    if hi > lo {
                        s += g.integrate(lo, hi, |rho| TAU * rho * w(rho) * w(rho));
                    }
                }
                return c_prime * s;
            }
            if r >= 4.0 {
                return 0.0;
            }
            let x = Vec2d::new(r, 0.0);
            let common = [
                Constraint::disc(Vec2d::zero(), 2.0),
                Constraint::disc(x, 2.0),
            ];
            let kinks = [
                (Vec2d::zero(), delta),
                (Vec2d::zero(), 1.0),
                (x, delta),
                (x, 1.0),
            ];
            let e = two_center(
                Vec2d::zero(),
                0.0,
                x,
                0.0,
                &common,
                &[],
                &[],
                &kinks,
                None,
                &rule,
                |u| w(u.norm()) * w((u - x).norm()),
            );
            c_prime * e.value
        })
        .collect();
    PiecewiseSpline::new(knots, vals, &[])
}

/// `R(t)` for the standard mollifier, cached per exponent.
fn riesz_mollified_profile(a: f64) -> Arc<PiecewiseSpline> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<PiecewiseSpline>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().unwrap().get(&a.to_bits()) {
        return t.clone();
    }
    let m = Mollifier::standard();
    let knots = refined_knots(4.0, 400, &[(2.0, 0.1, 0.0025)], &[]);
    let rule = PolarRule::with_tol(1e-12);
    let vals: Vec<f64> = knots
        .par_iter()
        .map(|&t| riesz_mollified_direct(m, a, t, &rule))
        .collect();
    let table = Arc::new(PiecewiseSpline::new(knots, vals, &[]));
    cache.lock().unwrap().insert(a.to_bits(), table.clone());
    table
}

fn riesz_mollified_direct(m: &Mollifier, a: f64, t: f64, rule: &PolarRule) -> f64 {
    let x = Vec2d::new(t, 0.0);
    let mut region = PolarRegion::new(x, a)
        .constrain(Constraint::disc(Vec2d::zero(), 2.0))
        .scale(0.5);
    for k in 1..4 {
        region = region.kink(Vec2d::zero(), 0.5 * k as f64);
    }
    region
        .integrate(rule, |y| {
            let d = (y - x).norm();
            if d == 0.0 {
                0.0
            } else {
                m.big_phi(y.norm()) * d.powf(-a)
            }
        })
        .value
}

/// `V_δ^{ss}(0)` of the mollified family at `δ = exp(ln_delta)`; stays finite
/// for schedules whose `δ` underflows.
pub fn mollified_self_energy(base: &KernelFamily, s: usize, ln_delta: f64) -> Result<f64> {
    base.check_species(s, s)?;
    let m = Mollifier::standard();
    let l0 = m.log_average(0.0);
    let v = match base.tag() {
        FamilyTag::Edge => -(ln_delta + l0) - 0.5,
        FamilyTag::Log => -base.weight(s).powi(2) * (ln_delta + l0),
        FamilyTag::Riesz => {
            let a = base.riesz_exponent().unwrap();
            (-a * ln_delta).exp() * riesz_mollified_profile(a).eval(0.0)
        }
    };
    if !v.is_finite() {
        return Err(Error::Domain(format!(
            "self-energy is not finite at ln δ = {ln_delta}"
        )));
    }
    Ok(v)
}

impl RegularizedKernel {
    pub fn base(&self) -> &KernelFamily {
        &self.base
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn family(&self) -> RegFamily {
        match &*self.inner {
            Inner::Mollified(_) => RegFamily::Mollified,
            Inner::Cutoff(_) => RegFamily::CoreCutoff,
            Inner::FromBelow(_) => RegFamily::FromBelow,
        }
    }

    pub fn spec(&self) -> RegularizerSpec {
        match &*self.inner {
            Inner::FromBelow(f) => RegularizerSpec::from_below(f.variant),
            Inner::Mollified(_) => RegularizerSpec::mollified(),
            Inner::Cutoff(_) => RegularizerSpec::core_cutoff(),
        }
    }

    pub fn species_count(&self) -> usize {
        self.base.species_count()
    }

    pub fn component_count(&self) -> usize {
        self.base.component_count()
    }

    /// `V_δ^{st}(x)`, continuous and finite everywhere.
    pub fn v_delta(&self, s: usize, t: usize, x: Vec2d) -> Result<f64> {
        self.base.check_species(s, t)?;
        let v = match &*self.inner {
            Inner::Mollified(m) => self.mollified_value(m, s, t, x),
            _ => self.base.v_reg(s, t, x) + self.conv_unchecked(s, t, x),
        };
        if !v.is_finite() {
            return Err(Error::Domain(format!(
                "V_delta is not finite at ({}, {})",
                x.x, x.y
            )));
        }
        Ok(v)
    }

    /// `V_reg^{δ,st}(x)`.
    pub fn v_reg_delta(&self, s: usize, t: usize, x: Vec2d) -> Result<f64> {
        self.base.check_species(s, t)?;
        Ok(self.v_reg_unchecked(s, t, x))
    }

    /// `Σ_k (W̄_{δ,k}^s ∗ W_{δ,k}^t)(x)`.
    pub fn conv_delta(&self, s: usize, t: usize, x: Vec2d) -> Result<f64> {
        self.base.check_species(s, t)?;
        Ok(self.conv_unchecked(s, t, x))
    }

    /// `V_δ^{ss}(0)`.
    pub fn self_energy(&self, s: usize) -> Result<f64> {
        self.v_delta(s, s, Vec2d::zero())
    }

    /// `(V_δ, V_reg^δ, conv_δ)` at `x` with `V_δ = V_reg^δ + conv_δ` as
    /// evaluated by [`Self::v_delta`].
    pub(crate) fn parts(&self, s: usize, t: usize, x: Vec2d) -> (f64, f64, f64) {
        match &*self.inner {
            Inner::Mollified(m) => {
                let v = self.mollified_value(m, s, t, x);
                let reg = self.v_reg_unchecked(s, t, x);
                (v, reg, v - reg)
            }
            _ => {
                let reg = self.base.v_reg(s, t, x);
                let conv = self.conv_unchecked(s, t, x);
                (reg + conv, reg, conv)
            }
        }
    }

    fn v_reg_unchecked(&self, s: usize, t: usize, x: Vec2d) -> f64 {
        match &*self.inner {
            Inner::Mollified(m) => {
                let r = x.norm();
                if r >= m.reach {
                    return self.mollified_value(m, s, t, x);
                }
                match self.mollified_vreg(m) {
                    Tabulated::Polar(tabs) => {
                        let (idx, rot) = self.base.edge_canonical(s, t).unwrap();
                        let y = x.rotate(rot);
                        tabs[idx].eval(r, y.angle())
                    }
                    Tabulated::Radial(sp) => self.base.weight(s) * self.base.weight(t) * sp.eval(r),
                }
            }
            _ => self.base.v_reg(s, t, x),
        }
    }

    fn conv_unchecked(&self, s: usize, t: usize, x: Vec2d) -> f64 {
        let r = x.norm();
        match &*self.inner {
            Inner::Mollified(m) => self.mollified_value(m, s, t, x) - self.v_reg_unchecked(s, t, x),
            Inner::Cutoff(c) => {
                if r >= 2.0 {
                    return 0.0;
                }
                match self.cutoff_tables(c) {
                    Tabulated::Polar(tabs) => {
                        let (idx, rot) = self.base.edge_canonical(s, t).unwrap();
                        tabs[idx].eval(r, x.rotate(rot).angle())
                    }
                    Tabulated::Radial(sp) => self.base.weight(s) * self.base.weight(t) * sp.eval(r),
                }
            }
            Inner::FromBelow(f) => {
                if r >= 4.0 {
                    0.0
                } else {
                    self.base.weight(s) * self.base.weight(t) * f.conv.eval(r)
                }
            }
        }
    }

    fn mollified_value(&self, m: &Mollified, s: usize, t: usize, x: Vec2d) -> f64 {
        let moll = Mollifier::standard();
        let d = self.delta;
        let r = x.norm();
        let tt = r / d;
        match self.base.tag() {
            FamilyTag::Edge => {
                let ang = self.base.burgers_angles().unwrap();
                let c = (ang[s] - ang[t]).cos();
                let sigma = ang[s] + ang[t];
                let quad = if r > 0.0 {
                    0.5 * (2.0 * x.angle() - sigma).cos() * moll.quadrupole_factor(tt)
                } else {
                    0.0
                };
                -c * (d.ln() + moll.log_average(tt)) - 0.5 * c + quad
            }
            FamilyTag::Log => {
                -self.base.weight(s) * self.base.weight(t) * (d.ln() + moll.log_average(tt))
            }
            FamilyTag::Riesz => {
                let a = self.base.riesz_exponent().unwrap();
                let prof = if tt <= 4.0 {
                    m.riesz.as_ref().unwrap().eval(tt)
                } else {
                    moll.riesz_far(a, tt)
                };
                self.base.weight(s) * self.base.weight(t) * d.powf(-a) * prof
            }
        }
    }

    /// Mollified Riesz `V_δ^{st}(x)` by direct two-dimensional quadrature.
    pub fn v_delta_direct(&self, s: usize, t: usize, x: Vec2d, tol: f64) -> Result<f64> {
        self.base.check_species(s, t)?;
        let (Inner::Mollified(_), Some(a)) = (&*self.inner, self.base.riesz_exponent()) else {
            return self.v_delta(s, t, x);
        };
        let m = Mollifier::standard();
        let d = self.delta;
        let mut rule = PolarRule::with_tol(tol);
        rule.radial_nodes = 24;
        let mut region = PolarRegion::new(x, a)
            .constrain(Constraint::disc(Vec2d::zero(), 2.0 * d))
            .scale(0.5 * d);
        for k in 1..4 {
            region = region.kink(Vec2d::zero(), 0.5 * k as f64 * d);
        }
        let e = region.integrate(&rule, |y| {
            let r = (y - x).norm();
            if r == 0.0 {
                0.0
            } else {
                m.big_phi_delta(y.norm(), d) * r.powf(-a)
            }
        });
        Ok(self.base.weight(s) * self.base.weight(t) * e.value)
    }

    fn mollified_vreg<'a>(&self, m: &'a Mollified) -> &'a Tabulated {
        m.vreg.get_or_init(|| {
            let d = self.delta;
            let moll = Mollifier::standard();
            let base_breaks: &[f64] = match self.base.tag() {
                FamilyTag::Riesz => &[1.0, 2.0, 3.0],
                _ => &[1.0],
            };
            let step = (d / 16.0).min(0.02);
            let mut zones = vec![(0.0, 3.0 * d, step)];
            zones.extend(base_breaks.iter().map(|&b| (b, 3.0 * d, step)));
            let knots = refined_knots(m.reach, 160, &zones, &[]);
            // Tensor rule over supp Φ_δ(· − x): Gauss in the radius, periodic
            // trapezoid in the angle, weights rescaled to unit mass.
            let g = gauss_legendre(12);
            let nphi = 32;
            let mut nodes: Vec<(f64, f64)> = Vec::new();
            for (lo, hi) in [(0.0, 1.0), (1.0, 2.0)] {
                for (rho, w) in g.mapped(lo, hi) {
                    nodes.push((rho, w * rho * moll.big_phi(rho)));
                }
            }
            let mass: f64 = nodes.iter().map(|n| n.1).sum::<f64>() * nphi as f64;
            let smooth = |x: Vec2d, f: &(dyn Fn(Vec2d) -> f64 + Sync)| {
                let mut acc = 0.0;
                for k in 0..nphi {
                    let e = Vec2d::unit((k as f64 + 0.5) * TAU / nphi as f64);
                    for &(rho, w) in &nodes {
                        acc += w * f(x + e.scale(d * rho));
                    }
                }
                acc / mass
            };
            match self.base.tag() {
                FamilyTag::Edge => {
                    let nang = 32;
                    let tabs = (0..self.base.edge_deltas().len())
                        .map(|idx| {
                            let f = |y: Vec2d| self.base.edge_table_value(idx, y);
                            let cells: Vec<(usize, usize)> = (0..nang)
                                .flat_map(|j| (0..knots.len()).map(move |i| (j, i)))
                                .collect();
                            let vals: Vec<f64> = cells
                                .par_iter()
                                .map(|&(j, i)| {
                                    smooth(
                                        Vec2d::unit(j as f64 * PI / nang as f64).scale(knots[i]),
                                        &f,
                                    )
                                })
                                .collect();
                            let mut grid = vec![vec![0.0; knots.len()]; nang];
                            for (&(j, i), v) in cells.iter().zip(vals) {
                                grid[j][i] = v;
                            }
                            PolarTable::new(&knots, PI, grid, &[])
                        })
                        .collect();
                    Tabulated::Polar(tabs)
                }
                _ => {
                    let w = self.base.weight(0).powi(2);
                    let f = |y: Vec2d| self.base.v_reg(0, 0, y) / w;
                    let vals: Vec<f64> = knots
                        .par_iter()
                        .map(|&r| smooth(Vec2d::new(r, 0.0), &f))
                        .collect();
                    Tabulated::Radial(PiecewiseSpline::new(knots.clone(), vals, &[]))
                }
            }
        })
    }

    /// `Σ_k ∫ W_k^s(u − x) W_k^t(u) du` over the removed cores, using the
    /// profiles of `fam` for species `(s, t)`.
    fn core_defect(
        fam: &KernelFamily,
        s: usize,
        t: usize,
        x: Vec2d,
        delta: f64,
        rule: &PolarRule,
    ) -> f64 {
        let r = x.norm();
        if r >= 1.0 + delta {
            return 0.0;
        }
        let kk = fam.component_count();
        let common = [
            Constraint::disc(Vec2d::zero(), 1.0),
            Constraint::disc(x, 1.0),
        ];
        let ea = [Constraint::disc(Vec2d::zero(), delta)];
        let eb = [Constraint::disc(x, delta)];
        two_center(
            Vec2d::zero(),
            1.0,
            x,
            1.0,
            &common,
            &ea,
            &eb,
            &[],
            None,
            rule,
            |u| {
                let mut a = [0.0; 4];
                let mut b = [0.0; 4];
                fam.profiles(s, u - x, &mut a[..kk]);
                fam.profiles(t, u, &mut b[..kk]);
                a[..kk].iter().zip(&b[..kk]).map(|(p, q)| p * q).sum()
            },
        )
        .value
    }

    /// `∫_0^{2π} Σ_k (|z| W_k^s)(θ)(|z| W_k^t)(θ) dθ` for degree −1 profiles.
    fn angular_product(fam: &KernelFamily, s: usize, t: usize) -> f64 {
        let n = 720;
        let kk = fam.component_count();
        let mut a = [0.0; 4];
        let mut b = [0.0; 4];
        let mut sum = 0.0;
        for i in 0..n {
            let z = Vec2d::unit(i as f64 * TAU / n as f64);
            fam.profiles(s, z, &mut a[..kk]);
            fam.profiles(t, z, &mut b[..kk]);
            sum += a[..kk]
                .iter()
                .zip(&b[..kk])
                .map(|(p, q)| p * q)
                .sum::<f64>();
        }
        sum * TAU / n as f64
    }

    fn cutoff_tables<'a>(&self, c: &'a Cutoff) -> &'a Tabulated {
        c.conv.get_or_init(|| {
            let d = self.delta;
            let rule = PolarRule::with_tol(TABLE_TOL);
            let step = (d / 8.0).min(0.02);
            let zones = [
                (0.0, 3.0 * d, step),
                (2.0 * d, 2.0 * step, step / 2.0),
                (1.0 - d, 2.0 * step, step / 2.0),
                (1.0, 2.0 * step, step / 2.0),
                (1.0 + d, 2.0 * step, step / 2.0),
            ];
            let knots = refined_knots(2.0, 64, &zones, &[1.0]);
            match self.base.tag() {
                FamilyTag::Edge => {
                    let lame = self.base.lame().unwrap_or_else(LameParameters::default);
                    let nang = 32;
                    let tabs = self
                        .base
                        .edge_deltas()
                        .iter()
                        .enumerate()
                        .map(|(idx, &delta_angle)| {
                            let pair = KernelFamily::edge(lame, &[0.0, delta_angle])
                                .expect("valid edge pair");
                            let at_zero = -d.ln() * Self::angular_product(&pair, 0, 1);
                            let cells: Vec<(usize, usize)> = (0..nang)
                                .flat_map(|j| (0..knots.len()).map(move |i| (j, i)))
                                .collect();
                            let vals: Vec<f64> = cells
                                .par_iter()
                                .map(|&(j, i)| {
                                    let r = knots[i];
                                    if r == 0.0 {
                                        return at_zero;
                                    }
                                    let x = Vec2d::unit(j as f64 * PI / nang as f64).scale(r);
                                    let v = pair.potential(0, 1, x).expect("x != 0");
                                    let conv = v - self.base.edge_table_value(idx, x);
                                    conv - Self::core_defect(&pair, 0, 1, x, d, &rule)
                                })
                                .collect();
                            let mut grid = vec![vec![0.0; knots.len()]; nang];
                            for (&(j, i), v) in cells.iter().zip(vals) {
                                grid[j][i] = v;
                            }
                            PolarTable::new(&knots, PI, grid, &[1.0])
                        })
                        .collect();
                    Tabulated::Polar(tabs)
                }
                FamilyTag::Log => {
                    let unit = KernelFamily::log(&[1.0]).expect("unit charge");
                    let at_zero = -d.ln() * Self::angular_product(&unit, 0, 0);
                    let vals: Vec<f64> = knots
                        .par_iter()
                        .map(|&r| {
                            if r == 0.0 {
                                return at_zero;
                            }
                            let x = Vec2d::new(r, 0.0);
                            let conv = unit.conv(0, 0, x).expect("x != 0");
                            conv - Self::core_defect(&unit, 0, 0, x, d, &rule)
                        })
                        .collect();
                    Tabulated::Radial(PiecewiseSpline::new(knots.clone(), vals, &[1.0]))
                }
                FamilyTag::Riesz => unreachable!("cut-off needs a profile bound"),
            }
        })
    }

    /// `W_{δ,k}^s(z)` for families with pointwise profiles; `false` for the
    /// mollified family, whose profiles are only available on grids.
    pub fn profiles_delta(&self, s: usize, z: Vec2d, out: &mut [f64]) -> bool {
        match &*self.inner {
            Inner::Mollified(_) => false,
            Inner::Cutoff(_) => {
                if z.norm() < self.delta {
                    out.iter_mut().for_each(|v| *v = 0.0);
                } else {
                    self.base.profiles(s, z, out);
                }
                true
            }
            Inner::FromBelow(f) => {
                let c = self.base.riesz_constant().unwrap().sqrt();
                out[0] = self.base.weight(s)
                    * c
                    * frombelow_profile(z.norm(), f.b, self.delta, f.variant);
                true
            }
        }
    }

    /// Radius of the closed ball containing every `W_{δ,k}^s`.
    pub fn profile_support(&self) -> f64 {
        match &*self.inner {
            Inner::Mollified(_) => self.base.profile_support() + self.delta,
            _ => self.base.profile_support(),
        }
    }

    /// Riesz constant `M` with `|V_δ| ≤ M 𝒱_a` for the mollified family.
    fn riesz_dominator_constant(&self) -> f64 {
        let Inner::Mollified(m) = &*self.inner else {
            return 1.0;
        };
        let (Some(a), Some(tab)) = (self.base.riesz_exponent(), m.riesz.as_ref()) else {
            return 1.0;
        };
        let moll = Mollifier::standard();
        (0..=8000)
            .map(|i| {
                let t = i as f64 * 1e-3;
                let v = if t <= 4.0 {
                    tab.eval(t)
                } else {
                    moll.riesz_far(a, t)
                };
                t.powf(a) * v
            })
            .fold(1.0, f64::max)
    }

    /// Dominator `U^{st}(x)` on `B(0,1) \ {0}`.
    pub fn dominator(&self, s: usize, t: usize, x: Vec2d) -> Result<f64> {
        self.base.check_species(s, t)?;
        let r = x.norm();
        if r == 0.0 {
            return Err(Error::Domain("dominator is singular at 0".into()));
        }
        let w = (self.base.weight(s) * self.base.weight(t)).abs();
        Ok(match (&*self.inner, self.base.tag()) {
            (Inner::Mollified(_), FamilyTag::Riesz) => {
                self.riesz_dominator_constant() * r.powf(-self.base.riesz_exponent().unwrap())
            }
            (Inner::Mollified(_), FamilyTag::Log) => w * (-r.ln() + 1.0),
            (Inner::Mollified(_), FamilyTag::Edge) => -r.ln() + 1.0,
            (Inner::Cutoff(c), _) => (c.c_tilde + self.vreg_sup(c)) * r.powf(-2.0 * CUTOFF_EPSILON),
            (Inner::FromBelow(_), _) => r.powf(-self.base.riesz_exponent().unwrap()),
        })
    }

    fn vreg_sup(&self, c: &Cutoff) -> f64 {
        *c.vreg_sup.get_or_init(|| {
            let n = self.base.species_count();
            let mut best = 0.0f64;
            for s in 0..n {
                for t in 0..n {
                    for i in 0..=40 {
                        for j in 0..64 {
                            let x = Vec2d::unit(j as f64 * TAU / 64.0).scale(i as f64 / 40.0);
                            best = best.max(self.base.v_reg(s, t, x).abs());
                        }
                    }
                }
            }
            best * 1.01
        })
    }

    pub fn dominator_formula(&self) -> String {
        match (&*self.inner, self.base.tag()) {
            (Inner::Mollified(_), FamilyTag::Riesz) => {
                format!("{} * |x|^-a", self.riesz_dominator_constant())
            }
            (Inner::Mollified(_), _) => "-log|x| + 1".into(),
            (Inner::Cutoff(c), _) => format!(
                "{} * |x|^-{}",
                c.c_tilde + self.vreg_sup(c),
                2.0 * CUTOFF_EPSILON
            ),
            (Inner::FromBelow(_), _) => "|x|^-a".into(),
        }
    }

    /// Builds all lazily tabulated data now.
    pub fn prepare(&self) {
        self.base.prepare();
        let x = Vec2d::new(0.5, 0.0);
        let _ = self.v_reg_delta(0, 0, x);
        let _ = self.conv_delta(0, 0, x);
    }

    pub fn descriptor(&self) -> RegDescriptor {
        let spec = self.spec();
        RegDescriptor {
            kernel: self.base.descriptor(),
            reg_family: spec.reg_family,
            variant: spec.variant,
            delta: self.delta,
            mollifier_profile: matches!(spec.reg_family, RegFamily::Mollified)
                .then(|| "(4/pi)(1-|x|^2)^3".to_string()),
            dominator: self.dominator_formula(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shifted_profile_example() {
        let r = frombelow_profile(1.0, 1.5, 1.0, FromBelowVariant::Shifted);
        assert!((r - 2f64.powf(-1.5)).abs() < 1e-15);
    }

    #[test]
    fn affine_cap_is_below_and_continuous() {
        let (b, d) = (1.5, 0.1);
        for i in 1..400 {
            let r = i as f64 * 0.005;
            let w = frombelow_profile(r, b, d, FromBelowVariant::AffineCap);
            assert!(w <= r.powf(-b) * riesz::cutoff(r) + 1e-12);
        }
        let lo = frombelow_profile(d * (1.0 - 1e-12), b, d, FromBelowVariant::AffineCap);
        let hi = frombelow_profile(d * (1.0 + 1e-12), b, d, FromBelowVariant::AffineCap);
        assert!((lo - hi).abs() < 1e-8);
    }

    #[test]
    fn invalid_delta() {
        let f = KernelFamily::log(&[1.0]).unwrap();
        assert!(mollify_kernel(&f, 0.0).is_err());
        assert!(cutoff_kernel(&f, 1.5).is_err());
        let r = KernelFamily::riesz_with_constant(1.0, 0.04).unwrap();
        assert!(cutoff_kernel(&r, 0.1).is_err());
    }
}

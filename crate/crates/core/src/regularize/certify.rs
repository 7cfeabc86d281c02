//! Empirical certificates for the dominator and annulus-convergence properties.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelFamily;
use crate::regularize::kernel::RegularizerSpec;
use crate::Vec2d;

/// Location of the worst sample of a check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub delta: f64,
    pub x: [f64; 2],
    pub s: usize,
    pub t: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominatorReport {
    pub name: String,
    pub pass: bool,
    pub worst_point: SamplePoint,
    pub ratio: f64,
    pub tolerance: f64,
}

const ANGLES: usize = 16;

/// Largest `|V_δ^{st}(x)| / U^{st}(x)` over a δ ladder and sample radii in
/// `(0, 1]`; fails with the worst offending sample when it exceeds `1 + tol`.
pub fn dominator_certify(
    spec: &RegularizerSpec,
    base: &KernelFamily,
    delta_ladder: &[f64],
    sample_radii: &[f64],
    tol: f64,
) -> Result<DominatorReport> {
    if sample_radii.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
        return Err(Error::Domain(
            "dominator samples must lie in B(0,1) \\ {0}".into(),
        ));
    }
    let n = base.species_count();
    let mut worst = (
        f64::NEG_INFINITY,
        SamplePoint {
            delta: 0.0,
            x: [0.0; 2],
            s: 0,
            t: 0,
        },
    );
    for &delta in delta_ladder {
        let reg = spec.build(base, delta)?;
        reg.prepare();
        let samples: Vec<(usize, usize, Vec2d)> = (0..n)
            .flat_map(|s| (0..n).map(move |t| (s, t)))
            .flat_map(|(s, t)| {
                sample_radii.iter().flat_map(move |&r| {
                    (0..ANGLES).map(move |j| {
                        (
                            s,
                            t,
                            Vec2d::unit((j as f64 + 0.25) * std::f64::consts::TAU / ANGLES as f64)
                                .scale(r),
                        )
                    })
                })
            })
            .collect();
        let ratios: Vec<Result<(f64, usize)>> = samples
            .par_iter()
            .enumerate()
            .map(|(i, &(s, t, x))| Ok((reg.v_delta(s, t, x)?.abs() / reg.dominator(s, t, x)?, i)))
            .collect();
        for r in ratios {
            let (ratio, i) = r?;
            if ratio > worst.0 {
                let (s, t, x) = samples[i];
                worst = (
                    ratio,
                    SamplePoint {
                        delta,
                        x: [x.x, x.y],
                        s,
                        t,
                    },
                );
            }
        }
    }
    let (ratio, p) = worst;
    if ratio > 1.0 + tol {
        return Err(Error::CertificationFailed {
            delta: p.delta,
            x: p.x,
            s: p.s,
            t: p.t,
            ratio,
        });
    }
    Ok(DominatorReport {
        name: "dominator".into(),
        pass: true,
        worst_point: p,
        ratio,
        tolerance: tol,
    })
}

/// `sup |V_δ^{st} − V^{st}|` over the annulus `r_in ≤ |x| ≤ r_out` for each
/// δ of the ladder.
pub fn annulus_deviation(
    spec: &RegularizerSpec,
    base: &KernelFamily,
    delta_ladder: &[f64],
    r_in: f64,
    r_out: f64,
    radial: usize,
) -> Result<Vec<f64>> {
    let n = base.species_count();
    delta_ladder
        .iter()
        .map(|&delta| {
            let reg = spec.build(base, delta)?;
            reg.prepare();
            let pts: Vec<(usize, usize, Vec2d)> = (0..n)
                .flat_map(|s| (0..n).map(move |t| (s, t)))
                .flat_map(|(s, t)| {
                    (0..=radial).flat_map(move |i| {
                        let r = r_in + (r_out - r_in) * i as f64 / radial as f64;
                        (0..ANGLES).map(move |j| {
                            (
                                s,
                                t,
                                Vec2d::unit(j as f64 * std::f64::consts::TAU / ANGLES as f64)
                                    .scale(r),
                            )
                        })
                    })
                })
                .collect();
            let devs: Vec<Result<f64>> = pts
                .par_iter()
                .map(|&(s, t, x)| Ok((reg.v_delta(s, t, x)? - base.potential(s, t, x)?).abs()))
                .collect();
            devs.into_iter().try_fold(0.0f64, |m, d| Ok(m.max(d?)))
        })
        .collect()
}

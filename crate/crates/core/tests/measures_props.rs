use std::f64::consts::TAU;

use multislip::measures::{
    discretize, discretize_with_info, lattice_spacing, min_separation, BoundingBox, EmpiricalMeasure, GridDensity,
    SpeciesSet,
};
use multislip::Vec2d;
use proptest::prelude::*;

fn species(n: usize) -> SpeciesSet {
    SpeciesSet::from_angles(&(0..n).map(|s| s as f64 * TAU / n as f64).collect::<Vec<_>>()).unwrap()
}

/// A sum of two Gaussian bumps per species on a random box.
fn density() -> impl Strategy<Value = GridDensity> {
    (
        1usize..=3,
        0.04f64..0.2,
        (6usize..30, 6usize..30),
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, 0.1f64..0.5, 0.1f64..1.0), 6),
    )
        .prop_map(|(sn, h, (cx, cy), bumps)| {
            let half = 0.5 * h * cx as f64;
            let bbox = BoundingBox::new(-half, -half, half, -half + h * cy as f64);
            GridDensity::from_fn(bbox, h, sn, |s, x| {
                bumps[2 * s..2 * s + 2]
                    .iter()
                    .map(|&(cx, cy, w, a)| {
                        a * (-(x - Vec2d::new(cx * half, cy * half)).norm_sq() / (2.0 * w * w)).exp()
                    })
                    .sum()
            })
            .unwrap()
        })
}

fn ladder_n() -> impl Strategy<Value = usize> {
    (0.0f64..1.0).prop_map(|u| (16.0 * 256f64.powf(u)).round() as usize)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn densities_have_unit_mass(mu in density()) {
        prop_assert!((mu.total_mass() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn discretization_contract(mu in density(), n in ladder_n()) {
        let sn = mu.species_count();
        let sp = species(sn);
        let (c, info) = discretize_with_info(&mu, &sp, n).unwrap();
        prop_assert_eq!(c.n(), n);
        prop_assert_eq!(info.r_n, lattice_spacing(sn, n, mu.sup_norm()));
        // Separation is exact, with no tolerance.
        prop_assert!(min_separation(&c).unwrap() >= info.r_n);
        for (s, &k) in c.species_counts().iter().enumerate() {
            prop_assert!((k as f64 / n as f64 - mu.species_mass(s)).abs() <= sn as f64 / n as f64);
        }
        let outer = mu.bbox().inflate(1.0 / mu.sup_norm());
        prop_assert!(c.atoms().iter().all(|&(_, p)| outer.contains(p)));
        let em = EmpiricalMeasure::new(c);
        prop_assert!((em.total_mass() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn sublattices_are_disjoint(mu in density(), n in ladder_n()) {
        let sn = mu.species_count();
        let (c, info) = discretize_with_info(&mu, &species(sn), n).unwrap();
        let q = (sn as f64).sqrt().ceil() as i64;
        let pitch = info.r_n * (1.0 + 1e-12);
        for s in 0..sn {
            let (ox, oy) = (s as i64 % q, s as i64 / q);
            for p in c.positions(s) {
                let (i, j) = ((p.x / pitch).round() as i64, (p.y / pitch).round() as i64);
                prop_assert_eq!(i.rem_euclid(q), ox);
                prop_assert_eq!(j.rem_euclid(q), oy);
            }
        }
    }
}

#[test]
fn discretization_is_deterministic() {
    let mu = GridDensity::truncated_gaussian(BoundingBox::square(1.0), 1.0 / 16.0, 0.4).unwrap();
    let sp = species(1);
    let a = discretize(&mu, &sp, 500).unwrap();
    let b = discretize(&mu, &sp, 500).unwrap();
    assert_eq!(a.to_json(), b.to_json());
}

#[test]
fn empirical_measures_converge_weakly() {
    let mu = GridDensity::from_fn(BoundingBox::square(1.0), 1.0 / 32.0, 2, |s, x| {
        (-(x - Vec2d::new(0.3 * s as f64, 0.0)).norm_sq() / 0.18).exp()
    })
    .unwrap();
    let sp = species(2);
    let tests: [fn(Vec2d) -> f64; 3] = [|x| x.x, |x| x.x * x.y + 0.5 * x.y, |x| x.norm_sq() - x.x * x.x * x.x];
    // Cell-exact integrals of the polynomials against the grid density by Gauss points.
    let g = [0.5 - 0.5 / 3f64.sqrt(), 0.5 + 0.5 / 3f64.sqrt()];
    let exact = |s: usize, f: fn(Vec2d) -> f64| -> f64 {
        let h = mu.h();
        let b = mu.bbox();
        let mut acc = 0.0;
        for j in 0..mu.ny() {
            for i in 0..mu.nx() {
                let v = mu.values(s)[j * mu.nx() + i];
                for gx in g {
                    for gy in g {
                        let x = Vec2d::new(b.x0 + (i as f64 + gx) * h, b.y0 + (j as f64 + gy) * h);
                        acc += 0.25 * v * h * h * f(x);
                    }
                }
            }
        }
        acc
    };
    for &n in &[64usize, 256, 1024, 4096] {
        let em = EmpiricalMeasure::new(discretize(&mu, &sp, n).unwrap());
        for f in tests {
            for s in 0..2 {
                let gap = (em.integrate(s, f) - exact(s, f)).abs();
                assert!(gap <= 3.0 / (n as f64).sqrt(), "n={n} s={s}: {gap}");
            }
        }
    }
}

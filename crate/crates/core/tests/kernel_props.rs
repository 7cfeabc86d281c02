use std::f64::consts::PI;
use std::sync::OnceLock;

use multislip::kernels::{riesz_potential, strain_kernel, BurgersAngle, KernelFamily, LameParameters};
use multislip::Vec2d;
use proptest::prelude::*;

fn point() -> impl Strategy<Value = Vec2d> {
    (1e-3f64..3.0, 0.0f64..2.0 * PI).prop_map(|(r, t)| Vec2d::unit(t).scale(r))
}

fn families() -> &'static [KernelFamily] {
    static F: OnceLock<Vec<KernelFamily>> = OnceLock::new();
    F.get_or_init(|| {
        let lame = LameParameters::new(0.8, 1.1).unwrap();
        vec![
            KernelFamily::edge(lame, &[0.0, 1.0, 2.5]).unwrap(),
            KernelFamily::riesz(0.7).unwrap(),
            KernelFamily::log(&[1.0, -2.0]).unwrap(),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn potentials_are_even_and_symmetric(x in point()) {
        for fam in families() {
            let ns = fam.species_count();
            for s in 0..ns {
                for t in 0..ns {
                    let v = fam.potential(s, t, x).unwrap();
                    let tol = 1e-12 * (1.0 + v.abs());
                    prop_assert!((v - fam.potential(s, t, -x).unwrap()).abs() <= tol);
                    prop_assert!((v - fam.potential(t, s, x).unwrap()).abs() <= tol);
                }
            }
        }
    }

    #[test]
    fn homogeneity(x in point(), alpha in 0.05f64..20.0, phi in 0.0f64..2.0 * PI, a in 0.1f64..1.9) {
        let lame = LameParameters::new(1.0, 0.6).unwrap();
        let k1 = strain_kernel(x.scale(alpha), BurgersAngle::new(phi), &lame).unwrap();
        let k0 = strain_kernel(x, BurgersAngle::new(phi), &lame).unwrap().scale(1.0 / alpha);
        prop_assert!((k1 - k0).norm() <= 1e-12 * (1.0 + k0.norm()));
        let v1 = riesz_potential(x.scale(alpha), a).unwrap();
        let v0 = alpha.powf(-a) * riesz_potential(x, a).unwrap();
        prop_assert!((v1 - v0).abs() <= 1e-12 * v0.abs());
    }

    #[test]
    fn v_reg_is_even(x in point()) {
        for fam in families() {
            let v = fam.v_reg(0, 0, x);
            prop_assert!((v - fam.v_reg(0, 0, -x)).abs() <= 1e-10 * (1.0 + v.abs()));
        }
    }
}

#[test]
fn decomposition_matches_the_potential_on_the_annulus() {
    for fam in families() {
        fam.prepare();
        let ns = fam.species_count();
        for &r in &[1e-3, 0.05, 0.3, 1.0] {
            for k in 0..4 {
                let x = Vec2d::unit(0.4 + 1.3 * k as f64).scale(r);
                for s in 0..ns {
                    let t = (s + 1) % ns;
                    let v = fam.potential(s, t, x).unwrap();
                    let split = fam.v_reg(s, t, x) + fam.conv(s, t, x).unwrap();
                    assert!((v - split).abs() <= 1e-4, "{:?} r={r}: {v} vs {split}", fam.tag());
                }
            }
        }
    }
}

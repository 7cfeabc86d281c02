use multislip::kernels::{strain_kernel_polar, LameParameters};
use multislip::{Matrix2d, Vec2d};
use multislip_harness::verify::{burgers_circulation, identity_battery, ElasticFields};

fn lame() -> LameParameters<f64> {
    LameParameters::new(0.7, 1.3).unwrap()
}

fn flipped_strain(r: f64, t: f64, phi: f64, l: &LameParameters<f64>) -> Matrix2d {
    strain_kernel_polar(r, t, phi, l).scale(-1.0)
}

fn zero_displacement(_: f64, _: f64, _: f64, _: &LameParameters<f64>) -> Vec2d {
    Vec2d::zero()
}

#[test]
fn closed_forms_pass_the_battery() {
    let checks = identity_battery(&ElasticFields::closed_form(), &lame(), 1e-8);
    assert_eq!(checks.len(), 5);
    for c in &checks {
        assert!(c.pass, "{} = {:e}", c.name, c.value);
    }
}

#[test]
fn wrong_sign_strain_fails_the_circulation() {
    let fields = ElasticFields { strain: flipped_strain, ..ElasticFields::closed_form() };
    let (worst, _) = burgers_circulation(&fields, &lame());
    // The circulation comes out as −b instead of b.
    assert!((worst - 2.0).abs() < 1e-8, "{worst}");
    let checks = identity_battery(&fields, &lame(), 1e-8);
    let circ = checks.iter().find(|c| c.name == "burgers_circulation").unwrap();
    assert!(!circ.pass);
}

#[test]
fn missing_displacement_fails_jump_and_boundary() {
    let fields = ElasticFields { displacement: zero_displacement, ..ElasticFields::closed_form() };
    let checks = identity_battery(&fields, &lame(), 1e-8);
    for name in ["displacement_jump", "boundary_integral"] {
        assert!(!checks.iter().find(|c| c.name == name).unwrap().pass, "{name} passed");
    }
    assert!(checks.iter().find(|c| c.name == "rotation_identity").unwrap().pass);
}

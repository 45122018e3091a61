use num_complex::Complex64;
use reeblab::profiles::{
    design_interpolation_curve, make_example_profile, validate_local_model, BindingProfile, Knot, ProfileKind,
    ProfileParams,
};

#[test]
fn designed_curve_validates() {
    let p = design_interpolation_curve(0.1, 0.1, 1.0, -0.7).unwrap();
    let rep = validate_local_model(&p, 256).unwrap();
    assert!(rep.passed, "{rep:?}");
    assert!((p.gamma1_at_0() - 1.0).abs() < 1e-15);
    assert!((p.kappa() + 0.7).abs() < 1e-12);
}

#[test]
fn designed_curve_has_exact_tail() {
    let p = design_interpolation_curve(0.1, 0.1, 1.0, -0.7).unwrap();
    for i in 0..=50 {
        let r = 0.9 + 0.1 * i as f64 / 50.0;
        let j = p.jet(r).unwrap();
        assert!((j.g1[0] + 0.1 * r).abs() < 1e-14, "r = {r}");
        assert!((j.g1[1] + 0.1).abs() < 1e-13);
        assert!((j.g2[0] - 1.0).abs() < 1e-14);
        assert!(j.g2[1].abs() < 1e-13);
    }
}

#[test]
fn designed_curve_turns_counterclockwise() {
    let p = design_interpolation_curve(0.1, 0.1, 1.0, -0.7).unwrap();
    for i in 1..=2000 {
        let r = i as f64 / 2000.0;
        let j = p.jet(r).unwrap();
        let g = Complex64::new(j.g1[0], j.g2[0]);
        let dg = Complex64::new(j.g1[1], j.g2[1]);
        let turning = (Complex64::i() * g * dg.conj()).re;
        assert!(turning > 0.0, "r = {r}");
        assert!(j.g1[1] < 0.0, "r = {r}");
    }
}

#[test]
fn designed_curve_is_bit_reproducible() {
    let a = design_interpolation_curve(0.1, 0.1, 1.0, -0.7).unwrap();
    let b = design_interpolation_curve(0.1, 0.1, 1.0, -0.7).unwrap();
    let bits = |p: &BindingProfile| -> Vec<u64> {
        p.knots().iter().flat_map(|k| [k.r, k.g1, k.dg1, k.g2, k.dg2]).map(f64::to_bits).collect()
    };
    assert_eq!(bits(&a), bits(&b));
}

#[test]
fn other_design_parameters() {
    for &(delta, eps0, g10, kappa) in &[(0.05, 0.2, 1.5, -0.5), (0.2, 0.05, 0.8, -1.3), (0.1, 0.3, 2.0, -2.5)] {
        let p = design_interpolation_curve(delta, eps0, g10, kappa).unwrap();
        assert!(validate_local_model(&p, 128).unwrap().passed);
    }
}

#[test]
fn mu_over_r_limit() {
    for p in [
        make_example_profile(ProfileKind::Example1, 1.0, 0.7).unwrap(),
        make_example_profile(ProfileKind::Example2, 1.3, 0.9).unwrap(),
        design_interpolation_curve(0.1, 0.1, 1.0, -0.7).unwrap(),
    ] {
        let j = p.jet(0.0).unwrap();
        let limit = j.g1[0] * j.g2[2];
        // Richardson on the samples at 1e-2, 1e-3, 1e-4 (error is O(r^2)).
        let f = |r: f64| p.mu(r).unwrap() / r;
        let ext = f(1e-4) + (f(1e-4) - f(1e-3)) / 99.0;
        assert!((ext - limit).abs() < 1e-2 * limit);
        assert!((f(1e-2) - limit).abs() < 1e-2 * limit);
    }
}

#[test]
fn leaf_coefficient_tends_to_kappa() {
    let p = design_interpolation_curve(0.1, 0.1, 1.0, -0.7).unwrap();
    let l = |r: f64| p.leaf_coefficient(r).unwrap();
    // Lambda is smooth in r^2: Richardson in u.
    let (r1, r2) = (1e-2, 0.5e-2);
    let ext = (4.0 * l(r2) - l(r1)) / 3.0;
    assert!((ext - p.kappa()).abs() < 1e-6);
}

#[test]
fn alpha_is_flat_at_axis() {
    for p in [
        make_example_profile(ProfileKind::Example1, 1.0, 0.7).unwrap(),
        design_interpolation_curve(0.1, 0.1, 1.0, -0.7).unwrap(),
    ] {
        let h = 1e-4;
        let a = |r: f64| p.derived_quantities(r).unwrap().alpha;
        let d = (-3.0 * a(0.0) + 4.0 * a(h) - a(2.0 * h)) / (2.0 * h);
        assert!(d.abs() < 1e-6, "{d}");
    }
}

#[test]
fn rising_gamma1_fails_condition_three() {
    let knots = vec![
        Knot { r: 0.0, g1: 1.0, dg1: -1.0, g2: 0.0, dg2: 1.0 },
        Knot { r: 0.4, g1: 0.84, dg1: -0.8, g2: 0.16, dg2: 0.8 },
        Knot { r: 0.7, g1: 0.9, dg1: 0.5, g2: 0.49, dg2: 1.4 },
    ];
    let p = BindingProfile::spline(ProfileParams { t: 1.0, k: 1.0, delta: 0.0 }, knots).unwrap();
    let rep = validate_local_model(&p, 64).unwrap();
    assert!(!rep.condition(3).passed);
    assert!(rep.condition(3).margin < 0.0);
    assert!(!rep.passed);
}

#[test]
fn unsorted_knots_name_the_index() {
    let text = r#"{"kind":"spline","T":1,"k":1,"delta":0,"r_max":0.5,
        "knots":[[0,1,-1,0,1],[0.5,0.75,-1,0.25,1],[0.3,0.9,-0.6,0.09,0.6]]}"#;
    let e = BindingProfile::from_json(text).unwrap_err();
    assert!(e.to_string().contains("knot 2"), "{e}");
}

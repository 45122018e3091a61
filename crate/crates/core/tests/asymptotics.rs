use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reeblab::asymptotics::{
    asymptotic_apply, circle_degree, relative_asymptotics_fit, spectrum, zero_count_check, HalfCylinderField, LoopField,
};
use reeblab::numerics::linspace;

fn rot(l: f64, t: f64, h0: [f64; 2]) -> [f64; 2] {
    let (c, s) = ((l * t).cos(), (l * t).sin());
    [c * h0[0] - s * h0[1], s * h0[0] + c * h0[1]]
}

#[test]
fn constants_are_eigenvectors() {
    let h = LoopField::from_fn(16, |_| [0.3, -1.2]).unwrap();
    let out = asymptotic_apply(-0.7, &h);
    for v in out.values() {
        assert!((v[0] + 0.21).abs() < 1e-14 && (v[1] - 0.84).abs() < 1e-14);
    }
}

#[test]
fn rotating_loops_are_eigenvectors() {
    for l in -5..=5 {
        let h = LoopField::from_fn(32, |t| rot(l as f64, t, [0.6, 0.8])).unwrap();
        let out = asymptotic_apply(-0.7, &h);
        let lam = -0.7 + l as f64;
        for (a, b) in out.values().iter().zip(h.values()) {
            assert!((a[0] - lam * b[0]).abs() < 1e-12 && (a[1] - lam * b[1]).abs() < 1e-12, "l = {l}");
        }
    }
}

#[test]
fn operator_is_linear() {
    let h1 = LoopField::from_fn(32, |t| [t.sin().exp(), (2.0 * t).cos()]).unwrap();
    let h2 = LoopField::from_fn(32, |t| [(3.0 * t).cos(), t.cos().powi(3)]).unwrap();
    let sum =
        LoopField::new(h1.values().iter().zip(h2.values()).map(|(a, b)| [a[0] + b[0], a[1] + b[1]]).collect()).unwrap();
    let (a, b, c) = (asymptotic_apply(0.4, &h1), asymptotic_apply(0.4, &h2), asymptotic_apply(0.4, &sum));
    for ((x, y), z) in a.values().iter().zip(b.values()).zip(c.values()) {
        assert!((x[0] + y[0] - z[0]).abs() < 1e-12 && (x[1] + y[1] - z[1]).abs() < 1e-12);
    }
}

#[test]
fn spectrum_near_kappa() {
    let sp = spectrum(-0.7, 64, 3).unwrap();
    let vals: Vec<f64> = sp.iter().map(|c| c.value).collect();
    for (v, want) in vals.iter().zip([-1.7, -0.7, 0.3]) {
        assert!((v - want).abs() < 1e-10, "{vals:?}");
    }
    assert!(sp.iter().all(|c| c.multiplicity == 2));
}

#[test]
fn spectrum_resolves_all_low_modes() {
    let sp = spectrum(-0.7, 64, 33).unwrap();
    assert_eq!(sp.len(), 33);
    let ls: Vec<i64> = sp.iter().map(|c| c.l).collect();
    assert_eq!(ls, (-16..=16).collect::<Vec<_>>());
    for c in &sp {
        assert_eq!(c.multiplicity, 2);
        assert!(c.deviation < 1e-8);
    }
    let neg = sp.iter().filter(|c| c.value < 0.0).map(|c| c.value).fold(f64::MIN, f64::max);
    assert!((neg + 0.7).abs() < 1e-8);
}

#[test]
fn integer_spectrum_at_zero_kappa() {
    let sp = spectrum(0.0, 16, 16).unwrap();
    assert_eq!(sp.len(), 16);
    for c in &sp {
        assert_eq!(c.multiplicity, 2);
        assert!((c.value - c.value.round()).abs() < 1e-10);
    }
    assert!(sp.iter().any(|c| c.value.abs() < 1e-10));
}

#[test]
fn spectrum_rejects_bad_sizes() {
    assert!(spectrum(-0.7, 15, 3).is_err());
    assert!(spectrum(-0.7, 16, 17).is_err());
}

#[test]
fn relative_fit_recovers_rate_and_winding() {
    let s = linspace(0.0, 20.0, 201);
    for l in [0i64, 1] {
        let lam = -0.7 + l as f64;
        let f = HalfCylinderField::from_fn(s.clone(), 32, |s, t| {
            let v = rot(l as f64, t, [1.0, 0.0]);
            let e = (lam * s).exp();
            [e * v[0], e * v[1]]
        })
        .unwrap();
        let fit = relative_asymptotics_fit(&f).unwrap();
        assert!((fit.lambda_hat - lam).abs() < 1e-10, "{}", fit.lambda_hat);
        assert_eq!(fit.winding, l);
    }
}

#[test]
fn relative_fit_separates_the_remainder() {
    let s = linspace(0.0, 20.0, 401);
    let f = HalfCylinderField::from_fn(s, 64, |s, t| {
        let e = (-0.7 * s).exp();
        let r = 0.1 * (-1.7 * s).exp() / e;
        let noise = [(3.0 * t).sin() + 0.5 * (5.0 * t).cos(), 0.7 * (2.0 * t).cos() - 0.2];
        let v = rot(1.0, t, [1.0, 0.0]);
        [e * (v[0] + r * noise[0]), e * (v[1] + r * noise[1])]
    })
    .unwrap();
    let fit = relative_asymptotics_fit(&f).unwrap();
    assert!((fit.lambda_hat + 0.7).abs() < 1e-3, "{}", fit.lambda_hat);
    assert!((fit.remainder_rate - 1.0).abs() < 0.05, "{}", fit.remainder_rate);
    assert_eq!(fit.winding, 1);
}

#[test]
fn relative_fit_rejects_vanishing_tails() {
    let s = linspace(0.0, 1.0, 20);
    let f = HalfCylinderField::from_fn(s, 8, |s, _| if s > 0.9 { [0.0, 0.0] } else { [1.0, 0.0] }).unwrap();
    assert!(relative_asymptotics_fit(&f).is_err());
}

#[test]
fn loop_csv_round_trip() {
    let h = LoopField::from_fn(16, |t| [t.cos(), 2.0 * t.sin()]).unwrap();
    let mut buf = Vec::new();
    h.write_csv(&mut buf).unwrap();
    assert!(buf.starts_with(b"t,x,y\n"));
    let back = LoopField::read_csv(&buf[..]).unwrap();
    assert_eq!(back, h);
    assert_eq!(circle_degree(&back).unwrap(), 1);
}

/// `e^{nz} Π (e^z − c_j)^{m_j}` with `z = s + it`.
fn product_field(s: &[f64], n_t: usize, n: i32, factors: &[(Complex64, u32)]) -> HalfCylinderField {
    HalfCylinderField::from_fn(s.to_vec(), n_t, |s, t| {
        let z = Complex64::new(s, t);
        let w = z.exp();
        let mut f = (z * n as f64).exp();
        for (c, m) in factors {
            f *= (w - c).powu(*m);
        }
        [f.re, f.im]
    })
    .unwrap()
}

#[test]
fn simple_double_and_absent_zeros() {
    let s = linspace(-2.0, 2.0, 161);
    let c = Complex64::from_polar(1.0, 1.0);
    let f = product_field(&s, 128, 0, &[(c, 1)]);
    let rep = zero_count_check(&f, -1.5, 1.5).unwrap();
    assert_eq!((rep.deg_lo, rep.deg_hi, rep.zero_order_sum), (0, 1, 1));
    assert!(rep.consistent);
    assert!((rep.zeros[0].t - 1.0).abs() < 0.1 && rep.zeros[0].s.abs() < 0.1);

    let f = product_field(&s, 128, 0, &[(c, 2)]);
    let rep = zero_count_check(&f, -1.5, 1.5).unwrap();
    assert_eq!(rep.zeros.len(), 1);
    assert_eq!(rep.zeros[0].order, 2);
    assert!(rep.consistent);

    let f = product_field(&s, 128, 1, &[]);
    let rep = zero_count_check(&f, -1.5, 1.5).unwrap();
    assert_eq!((rep.deg_lo, rep.deg_hi, rep.zero_order_sum), (1, 1, 0));
    assert!(rep.consistent && rep.zeros.is_empty());
}

#[test]
fn zero_count_on_random_products() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let s = linspace(-2.0, 2.0, 161);
    for case in 0..20 {
        let k = rng.random_range(1..=3);
        let factors: Vec<(Complex64, u32)> = (0..k)
            .map(|j| {
                // Separate the zeros in s so boxes never collide.
                let ln_r = -1.2 + 1.2 * j as f64 + rng.random_range(-0.2..0.2);
                let arg = rng.random_range(0.0..std::f64::consts::TAU);
                (Complex64::from_polar(ln_r.exp(), arg), rng.random_range(1..=2))
            })
            .collect();
        let n = rng.random_range(-1..=1);
        let f = product_field(&s, 128, n, &factors);
        let rep = zero_count_check(&f, -1.8, 1.8).unwrap();
        let want: i64 = factors.iter().map(|(_, m)| *m as i64).sum();
        assert_eq!(rep.zero_order_sum, want, "case {case}: {rep:?}");
        assert_eq!(rep.deg_lo, n as i64, "case {case}");
        assert!(rep.consistent, "case {case}");
        assert!(rep.zeros.iter().all(|z| z.order > 0));
    }
}

#[test]
fn zero_on_boundary_row_is_rejected() {
    let s = linspace(-1.0, 1.0, 81);
    let f = product_field(&s, 64, 0, &[(Complex64::new(1.0, 0.0), 1)]);
    assert!(zero_count_check(&f, 0.0, 1.0).is_err());
}

use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reeblab::beltrami::transforms::d_dbar_fd4;
use reeblab::beltrami::{
    beurling_transform, bp_norm, cauchy_transform, coefficient_from_metric, holder_solve, inverse_coefficient,
    invert_point, metric_coefficient, normalized_qc_map, radial_stretch, solve_inhomogeneous, w1p_distance,
    BeltramiCoefficient, GridField,
};
use reeblab::Error;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `f = (1 − |z|²)^8` on the unit disk with its analytic `∂` and `∂̄`.
fn bump_with_derivatives(n: usize, l: f64) -> (GridField, GridField, GridField) {
    let f = GridField::from_fn(n, l, |z| {
        let t = 1.0 - z.norm_sqr();
        if t > 0.0 {
            Complex64::new(t.powi(8), 0.0)
        } else {
            ZERO
        }
    })
    .unwrap();
    let d = GridField::from_fn(n, l, |z| {
        let t = 1.0 - z.norm_sqr();
        if t > 0.0 {
            -8.0 * t.powi(7) * z.conj()
        } else {
            ZERO
        }
    })
    .unwrap();
    let dbar = GridField::from_fn(n, l, |z| {
        let t = 1.0 - z.norm_sqr();
        if t > 0.0 {
            -8.0 * t.powi(7) * z
        } else {
            ZERO
        }
    })
    .unwrap();
    (f, d, dbar)
}

fn gaussian_bump(n: usize, l: f64) -> GridField {
    GridField::from_fn(n, l, |z| {
        let r2 = z.norm_sqr();
        if r2 < 1.0 {
            Complex64::new((-4.0 * r2).exp() * (1.0 - r2).powi(6), 0.3 * z.re * (1.0 - r2).powi(6))
        } else {
            ZERO
        }
    })
    .unwrap()
}

fn rel_l2_in(a: &GridField, b: &GridField, radius: f64) -> f64 {
    a.zip_map(b, |x, y| x - y).lp_norm_in(2.0, radius) / b.lp_norm_in(2.0, radius)
}

#[test]
fn transforms_of_zero_vanish() {
    let g = GridField::zeros(64, 4.0).unwrap();
    assert_eq!(cauchy_transform(&g).unwrap().sup_norm(), 0.0);
    assert_eq!(beurling_transform(&g).unwrap().sup_norm(), 0.0);
}

#[test]
fn beurling_is_an_l2_isometry() {
    let (_, _, g) = bump_with_derivatives(256, 4.0);
    let gg = beurling_transform(&g).unwrap();
    assert!((gg.l2_norm() - g.l2_norm()).abs() < 1e-8 * g.l2_norm());

    // Random disk-supported data with zero mean.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let raw = GridField::from_fn(128, 4.0, |_| ZERO).unwrap();
    let mut vals = raw.into_values();
    let probe = GridField::zeros(128, 4.0).unwrap();
    let inside: Vec<usize> = (0..vals.len()).filter(|&k| probe.point_at(k).norm() < 1.0).collect();
    for &k in &inside {
        vals[k] = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    }
    let mean = inside.iter().map(|&k| vals[k]).sum::<Complex64>() / inside.len() as f64;
    for &k in &inside {
        vals[k] -= mean;
    }
    let g = GridField::new(128, 4.0, vals).unwrap();
    let gg = beurling_transform(&g).unwrap();
    assert!((gg.l2_norm() - g.l2_norm()).abs() < 1e-8 * g.l2_norm());
}

#[test]
fn beurling_maps_dbar_to_d() {
    let (_, d, dbar) = bump_with_derivatives(256, 4.0);
    let gg = beurling_transform(&dbar).unwrap();
    let err = gg.zip_map(&d, |a, b| a - b).sup_norm();
    assert!(err < 1e-6, "{err:e}");
}

#[test]
fn cauchy_transform_inverts_dbar() {
    let g = gaussian_bump(512, 4.0);
    let ag = cauchy_transform(&g).unwrap();
    assert_eq!(ag.at_origin(), ZERO);
    let (d_fd, dbar_fd) = d_dbar_fd4(&ag);
    let res = rel_l2_in(&dbar_fd, &g, 3.0);
    assert!(res < 1e-3, "dbar residual {res:e}");
    let gg = beurling_transform(&g).unwrap();
    let res = rel_l2_in(&d_fd, &gg, 3.0);
    assert!(res < 1e-3, "d residual {res:e}");
}

/// `(∫ |1/(ζ(ζ−1))|^{4/3} dA)^{3/4} / π`, the constant in
/// `|Ag(z₁) − Ag(z₂)| ≤ C ‖g‖₄ |z₁ − z₂|^{1/2}` by Hölder's inequality.
fn cauchy_holder_constant_p4() -> f64 {
    // Symmetric about Re ζ = 1/2: integrate Re ζ < 1/2 in polar coordinates
    // about 0 with ρ = s³, which removes the ρ^{-1/3} singularity.
    let integrand = |s: f64, th: f64| {
        let rho = s.powi(3);
        let z = Complex64::from_polar(rho, th);
        3.0 * s * s * rho * (1.0 / (z * (z - 1.0))).norm().powf(4.0 / 3.0)
    };
    let n_th = 2000;
    let mut total = 0.0;
    for i in 0..n_th {
        let th = -PI + (i as f64 + 0.5) * 2.0 * PI / n_th as f64;
        let c = th.cos();
        let s_max = if c > 0.0 { (0.5 / c).powf(1.0 / 3.0).min(100.0) } else { 100.0 };
        let n_s = 4000;
        let ds = s_max / n_s as f64;
        let row: f64 = (0..n_s).map(|j| integrand((j as f64 + 0.5) * ds, th)).sum::<f64>() * ds;
        total += row * 2.0 * PI / n_th as f64;
    }
    // Tail beyond ρ = 10⁶ on the half plane: ∫ ρ^{-5/3} dρ over an angle π.
    total += PI * 1.5 * 1e6f64.powf(-2.0 / 3.0);
    (2.0 * total).powf(0.75) / PI
}

#[test]
fn cauchy_transform_is_holder_with_bounded_constant() {
    let bound = cauchy_holder_constant_p4();
    assert!((bound - 3.4866).abs() < 1e-2, "{bound}");
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for width in [0.6, 0.3, 0.15] {
        let g = GridField::from_fn(256, 4.0, |z| {
            let r2 = z.norm_sqr();
            if r2 < 1.0 {
                Complex64::new((-r2 / (width * width)).exp() * (1.0 - r2).powi(4), 0.0)
            } else {
                ZERO
            }
        })
        .unwrap();
        let ag = cauchy_transform(&g).unwrap();
        let gp = g.lp_norm(4.0);
        for _ in 0..10_000 {
            let a = rng.random_range(0..256 * 256);
            let b = rng.random_range(0..256 * 256);
            let d = (ag.point_at(a) - ag.point_at(b)).norm();
            if d > 0.0 && ag.point_at(a).norm() < 2.5 && ag.point_at(b).norm() < 2.5 {
                worst = worst.max((ag.values()[a] - ag.values()[b]).norm() / (gp * d.sqrt()));
            }
        }
    }
    assert!(worst > 0.0 && worst <= bound, "measured C_4 = {worst}, bound {bound}");
}

#[test]
fn inhomogeneous_trivial_cases() {
    let n = 128;
    let sigma = gaussian_bump(n, 4.0);
    let zero_mu = BeltramiCoefficient::new(GridField::zeros(n, 4.0).unwrap()).unwrap();
    let sol = solve_inhomogeneous(&zero_mu, &sigma, 4.0, 1e-10).unwrap();
    assert_eq!(sol.iterations, 1);
    assert_eq!(sol.q, beurling_transform(&sigma).unwrap());
    assert_eq!(sol.u, cauchy_transform(&sigma).unwrap());

    let mu = radial_stretch(n, 4.0, 2.0, 0.0).unwrap();
    let sol = solve_inhomogeneous(&mu, &GridField::zeros(n, 4.0).unwrap(), 4.0, 1e-10).unwrap();
    assert_eq!(sol.u.sup_norm(), 0.0);
}

#[test]
fn inhomogeneous_contraction_at_one_third() {
    let n = 128;
    let sigma = gaussian_bump(n, 4.0);
    let mu = radial_stretch(n, 4.0, 2.0, 0.0).unwrap();
    assert!((mu.sup_norm() - 1.0 / 3.0).abs() < 1e-15);
    let tol = 1e-10;
    let sol = solve_inhomogeneous(&mu, &sigma, 4.0, tol).unwrap();
    assert!(sol.contraction_rate < 1.0);
    let bound = (tol.ln() / sol.contraction_rate.ln()).ceil() as usize;
    // The first iterate is Γσ; contraction steps are the ones after it.
    assert!(sol.iterations - 1 <= bound, "{} vs {bound}", sol.iterations);
    assert!(sol.residual <= tol, "{:e}", sol.residual);
    // Residual of ∂̄u − μ∂u − σ, with ∂u = q and ∂̄u = μq + σ from the transforms.
    let (d_fd, dbar_fd) = d_dbar_fd4(&sol.u);
    let r = dbar_fd.zip_map(&mu.field().zip_map(&d_fd, |m, d| m * d), |a, b| a - b).zip_map(&sigma, |a, s| a - s);
    assert!(r.lp_norm_in(2.0, 3.0) < 5e-2 * sigma.l2_norm(), "{:e}", r.lp_norm_in(2.0, 3.0));
    assert!(sol.q_over_sigma.is_finite() && sol.q_over_sigma > 0.0);
}

#[test]
fn contraction_near_p2_is_bounded_by_sup_norm() {
    let n = 128;
    let sigma = gaussian_bump(n, 4.0);
    let mu = radial_stretch(n, 4.0, 2.0, 0.0).unwrap();
    let sol = solve_inhomogeneous(&mu, &sigma, 2.0 + 1e-6, 1e-10).unwrap();
    assert!(sol.contraction_rate <= mu.sup_norm() * (1.0 + 1e-3), "{}", sol.contraction_rate);
}

#[test]
fn contraction_rate_grows_with_mu_and_p() {
    let n = 128;
    let sigma = gaussian_bump(n, 4.0);
    let mut last = 0.0;
    for k in [1.5, 2.0, 3.0, 5.0] {
        let mu = radial_stretch(n, 4.0, k, 0.0).unwrap();
        let rate = solve_inhomogeneous(&mu, &sigma, 4.0, 1e-10).unwrap().contraction_rate;
        assert!(rate > last, "K = {k}: {rate} <= {last}");
        last = rate;
    }
    let mu = radial_stretch(n, 4.0, 2.0, 0.0).unwrap();
    let mut last = 0.0;
    for p in [2.5, 4.0, 6.0, 8.0] {
        let rate = solve_inhomogeneous(&mu, &sigma, p, 1e-10).unwrap().contraction_rate;
        assert!(rate >= last, "p = {p}: {rate} < {last}");
        last = rate;
    }
}

#[test]
fn near_unit_coefficient_fails_to_contract() {
    let n = 64;
    let mu = radial_stretch(n, 4.0, 199.0, 0.0).unwrap();
    assert!(mu.sup_norm() > 0.98);
    let res = normalized_qc_map(&mu, 6.0, 1e-12);
    assert!(matches!(res, Err(Error::NonContraction { .. })), "{res:?}");
}

#[test]
fn zero_coefficient_gives_the_exact_identity() {
    let mu = BeltramiCoefficient::new(GridField::zeros(64, 4.0).unwrap()).unwrap();
    let map = normalized_qc_map(&mu, 4.0, 1e-10).unwrap();
    assert!(map.displacement.values().iter().all(|v| *v == ZERO));
    assert_eq!(map.iterations, 0);
    let inv = inverse_coefficient(&mu, &map).unwrap();
    assert!(inv.nu.values().iter().all(|v| *v == ZERO));
}

/// `max_{|z| ≤ 1} | |α(z)| − |z|^K |`.
fn radial_error(map: &reeblab::beltrami::QcMap, k: f64) -> f64 {
    let alpha = map.alpha();
    alpha
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| alpha.point_at(*i).norm() <= 1.0)
        .map(|(i, a)| (a.norm() - alpha.point_at(i).norm().powf(k)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn radial_stretch_reproduces_z_abs_z() {
    let tol = 1e-10;
    let mu = radial_stretch(512, 4.0, 2.0, 0.0).unwrap();
    let map = normalized_qc_map(&mu, 4.0, tol).unwrap();
    assert!(map.jacobian_ok, "{}", map.jacobian_min);
    assert!(map.contraction_rate < 1.0);
    assert!(map.iterations.abs_diff(map.predicted_iterations) <= 2);
    // α(z) = z|z| inside the disk and z outside, up to the normalization constant.
    let alpha = map.alpha();
    let err = alpha
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| alpha.point_at(*i).norm() <= 1.0)
        .map(|(i, a)| {
            let z = alpha.point_at(i);
            (a - z * z.norm()).norm()
        })
        .fold(0.0, f64::max);
    assert!(err < 1e-2, "{err:e}");
}

#[test]
fn radial_stretch_family_has_power_profiles() {
    for (k, tol) in [(1.5, 1e-2), (2.0, 1e-2), (3.0, 2e-2)] {
        let mu = radial_stretch(256, 4.0, k, 0.0).unwrap();
        let map = normalized_qc_map(&mu, 4.0, 1e-10).unwrap();
        let err = radial_error(&map, k);
        assert!(err < tol, "K = {k}: {err:e}");
        assert!(map.jacobian_ok);
    }
}

#[test]
fn truncated_coefficients_converge() {
    let (n, p) = (512, 4.0);
    let full = normalized_qc_map(&radial_stretch(n, 4.0, 2.0, 0.0).unwrap(), p, 1e-10).unwrap();
    let dists: Vec<f64> = (0..5)
        .map(|k| {
            let mu = radial_stretch(n, 4.0, 2.0, 0.4 * 0.5f64.powi(k)).unwrap();
            let m = normalized_qc_map(&mu, p, 1e-10).unwrap();
            w1p_distance(&m, &full, p, 1.0)
        })
        .collect();
    for w in dists.windows(2) {
        assert!(w[1] < w[0], "{dists:?}");
    }
}

/// Residual `∂̄β − ν∂β` of the numerical inverse `β`, by fourth-order
/// differences, on `|w| ≤ 3` outside `band` cells around the origin and the
/// unit circle (where `ν` jumps and `∂β` is singular).
fn inverse_residual(n: usize, band: f64) -> (GridField, GridField, f64) {
    let mu = radial_stretch(n, 4.0, 2.0, 0.0).unwrap();
    let map = normalized_qc_map(&mu, 4.0, 1e-10).unwrap();
    let inv = inverse_coefficient(&mu, &map).unwrap();
    assert!(inv.nu.sup_norm() <= mu.sup_norm() + 1e-15);
    let h = map.displacement.h();
    let beta = inv.inverse_displacement.map(|w, d| w + d);
    let (d, dbar) = d_dbar_fd4(&beta);
    let r = dbar.zip_map(&inv.nu.zip_map(&d, |v, x| v * x), |a, b| a - b).map(|w, v| {
        let keep = w.norm() <= 3.0 && w.norm() >= band * h && (w.norm() - 1.0).abs() >= band * h;
        if keep {
            v
        } else {
            ZERO
        }
    });
    (beta, inv.nu, r.l2_norm())
}

#[test]
fn inverse_of_radial_stretch() {
    let (beta, nu, res) = inverse_residual(512, 3.0);
    assert!(res < 1e-2, "inverse Beltrami residual {res:e}");
    let h = beta.h();

    // Closed form α⁻¹(w) = w/|w|^{1/2} on the disk, identity outside.
    let closed = GridField::from_fn(512, 4.0, |w| {
        let r = w.norm();
        if r > 0.0 && r <= 1.0 {
            w / r.sqrt()
        } else {
            w
        }
    })
    .unwrap();
    let err = beta.zip_map(&closed, |a, b| a - b).sup_norm_in(1.5);
    assert!(err < 1e-2, "inverse map error {err:e}");

    // ∂̄β/∂β of the closed form is −(1/3) w/w̄ inside the disk.
    let nu_err = nu
        .map(|w, v| {
            let r = w.norm();
            if r >= 3.0 * h && r <= 1.0 - 3.0 * h {
                v + w / w.conj() / 3.0
            } else {
                ZERO
            }
        })
        .sup_norm();
    assert!(nu_err < 2e-2, "{nu_err:e}");
}

#[test]
fn inverse_residual_including_singular_sets_shrinks_with_n() {
    let (_, _, coarse) = inverse_residual(256, 0.0);
    let (_, _, fine) = inverse_residual(512, 0.0);
    assert!(fine < coarse, "{fine:e} vs {coarse:e}");
}

#[test]
fn composition_with_inverse_is_identity() {
    let n = 256;
    let mu = radial_stretch(n, 4.0, 3.0, 0.0).unwrap();
    let map = normalized_qc_map(&mu, 4.0, 1e-10).unwrap();
    let disp = &map.displacement;
    let h = disp.h();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..500 {
        let z = Complex64::new(rng.random_range(-1.2..1.2), rng.random_range(-1.2..1.2));
        let (v, _, _) = reeblab::beltrami::inverse::bicubic(disp, z);
        let w = z + v;
        let back = invert_point(disp, w, w).unwrap();
        assert!((back - z).norm() < 3.0 * h, "{z} -> {back}");
    }
}

#[test]
fn holder_solve_trivial_case() {
    let z0 = GridField::zeros(128, 4.0).unwrap();
    let sol = holder_solve(&z0, &z0, &z0, 0.5, 0.5, 1e-10).unwrap();
    let err = sol.w.map(|z, w| w - z).sup_norm_in(0.5);
    assert_eq!(err, 0.0);
}

#[test]
fn holder_solve_with_source_only() {
    // δ = (1 − |z|²/R²)⁴ has the Cauchy transform F with ∂̄F = δ, F(0) = 0:
    // Σ_j c_j z^j z̄^{j+1}/(j+1) inside, (Σ_j c_j R^{2j+2}/(j+1))/z outside,
    // where δ = Σ_j c_j |z|^{2j}; (Γδ)(0) = ∂F(0) = 0.
    let r0: f64 = 0.5;
    let c: Vec<f64> = (0..=4)
        .map(|j| {
            let binom = [1.0, 4.0, 6.0, 4.0, 1.0][j];
            binom * (-1.0f64 / (r0 * r0)).powi(j as i32)
        })
        .collect();
    let n = 256;
    let delta = GridField::from_fn(n, 4.0, |z| {
        let t = 1.0 - z.norm_sqr() / (r0 * r0);
        if t > 0.0 {
            Complex64::new(t.powi(4), 0.0)
        } else {
            ZERO
        }
    })
    .unwrap();
    let zero = GridField::zeros(n, 4.0).unwrap();
    let sol = holder_solve(&zero, &zero, &delta, r0, 0.5, 1e-12).unwrap();
    assert!(sol.residual < 1e-6, "{:e}", sol.residual);
    let f = |z: Complex64| {
        if z.norm() <= r0 {
            c.iter()
                .enumerate()
                .map(|(j, cj)| z.powu(j as u32) * z.conj().powu(j as u32 + 1) * (cj / (j as f64 + 1.0)))
                .sum::<Complex64>()
        } else {
            let m: f64 = c.iter().enumerate().map(|(j, cj)| cj * r0.powi(2 * j as i32 + 2) / (j as f64 + 1.0)).sum();
            m / z
        }
    };
    let err = sol.w.map(|z, w| w - z - f(z)).sup_norm_in(r0);
    assert!(err < 1e-4, "{err:e}");
}

#[test]
fn holder_ratios_shrink_with_radius() {
    let n = 256;
    let mu = GridField::from_fn(n, 4.0, |z| if z.norm() <= 1.0 { z * 0.5 } else { ZERO }).unwrap();
    let gamma = GridField::from_fn(n, 4.0, |z| if z.norm() <= 1.0 { Complex64::new(0.5, 0.0) } else { ZERO }).unwrap();
    let delta = GridField::zeros(n, 4.0).unwrap();
    let alpha_h = 0.5;
    let mut thetas = Vec::new();
    for r in [0.8, 0.4, 0.2] {
        let sol = holder_solve(&mu, &gamma, &delta, r, alpha_h, 1e-10).unwrap();
        assert!(sol.theta < 1.0);
        thetas.push(sol.theta);
    }
    for w in thetas.windows(2) {
        assert!(w[1] <= w[0] * 0.5f64.powf(alpha_h), "{thetas:?}");
    }
}

#[test]
fn metric_coefficients() {
    let n = 16;
    let ones = vec![1.0; n * n];
    let zeros = vec![0.0; n * n];
    let mu = coefficient_from_metric(n, 2.0, &ones, &zeros, &ones).unwrap();
    assert!(mu.is_zero());
    let fours = vec![4.0; n * n];
    let mu = coefficient_from_metric(n, 2.0, &fours, &zeros, &ones).unwrap();
    assert!((mu.field().at_origin() - 1.0 / 3.0).norm() < 1e-15);
    let mut bad = ones.clone();
    bad[7] = -1.0;
    assert!(coefficient_from_metric(n, 2.0, &bad, &zeros, &ones).is_err());
}

proptest! {
    #[test]
    fn positive_definite_metrics_give_subunit_coefficients(
        a in 1e-3f64..1e3, b in -1.0f64..1.0, c in 1e-3f64..1e3,
    ) {
        // g12 = b √(g11 g22) keeps the metric positive definite for |b| < 1.
        let g12 = 0.999 * b * (a * c).sqrt();
        let mu = metric_coefficient(a, g12, c).unwrap();
        prop_assert!(mu.norm() < 1.0);
    }
}

#[test]
fn bp_norm_of_conjugate_on_the_disk() {
    let u = GridField::from_fn(256, 2.0, |z| if z.norm() <= 1.0 { z.conj() } else { ZERO }).unwrap();
    let r = bp_norm(&u, 4.0, 1.0).unwrap();
    assert!((r.holder_part - 2f64.sqrt()).abs() < 1e-12, "{}", r.holder_part);
    assert!(r.d_lp < 1e-12, "{}", r.d_lp);
    assert!((r.dbar_lp - PI.powf(0.25)).abs() < 1e-2, "{}", r.dbar_lp);
    assert!((r.total - r.holder_part - r.d_lp - r.dbar_lp).abs() < 1e-15);
    assert_eq!(bp_norm(&u, 4.0, 1.0).unwrap(), r);
}

#[test]
fn grid_binary_round_trip_through_files() {
    let g = gaussian_bump(32, 2.0);
    let dir = std::env::temp_dir().join(format!("reeblab-qcg1-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("g.qcg1");
    g.write_qcg1(std::fs::File::create(&path).unwrap()).unwrap();
    assert_eq!(GridField::read_qcg1(std::fs::File::open(&path).unwrap()).unwrap(), g);
    std::fs::remove_dir_all(&dir).unwrap();
}

//! Profile files, grid files, claims and in-process runs.

use std::fs;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reeblab::asymptotics::HalfCylinderField;
use reeblab::beltrami::GridField;
use reeblab::harness::{
    canonical_json, grid_io, parse_profile_file, profile_canonical_json, read_half_cylinder, run, write_half_cylinder,
    Claim, Command, GridIo, MuSource, RunConfig,
};
use reeblab::profiles::{make_example_profile, ProfileKind};
use reeblab::Error;

fn random_grid(n: usize, seed: u64) -> GridField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n * n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    GridField::new(n, 3.0, values).unwrap()
}

#[test]
fn example2_profile_round_trips_canonically() {
    let dir = tempfile::tempdir().unwrap();
    let p = make_example_profile(ProfileKind::Example2, 1.3, 0.9).unwrap();
    let text = profile_canonical_json(&p).unwrap();
    let path = dir.path().join("p.json");
    fs::write(&path, &text).unwrap();
    let back = parse_profile_file(&path).unwrap();
    assert_eq!(profile_canonical_json(&back).unwrap(), text);
    assert_eq!(back.kind(), ProfileKind::Example2);
}

#[test]
fn profile_file_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.json");
    fs::write(&path, r#"{"kind":"example3","T":1,"k":0.7,"r_max":0.9}"#).unwrap();
    let e = parse_profile_file(&path).unwrap_err();
    assert!(matches!(e, Error::Schema(_)), "{e}");
    assert!(e.to_string().contains("example3"));

    fs::write(
        &path,
        r#"{"kind":"spline","T":1,"k":1,"r_max":0.5,
            "knots":[[0,1,-1,0,1],[0.5,0.75,-1,0.25,1],[0.3,0.9,-0.6,0.09,0.6]]}"#,
    )
    .unwrap();
    let e = parse_profile_file(&path).unwrap_err();
    assert!(matches!(e, Error::Schema(_)) && e.to_string().contains("knot 2"), "{e}");

    assert!(matches!(parse_profile_file(&dir.path().join("missing.json")), Err(Error::Io(_))));
}

#[test]
fn grid_file_round_trip_is_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.qcg1");
    let g = random_grid(16, 5);
    grid_io(&path, GridIo::Write(&g)).unwrap();
    let back = grid_io(&path, GridIo::Read).unwrap();
    assert_eq!(back.n(), 16);
    for (a, b) in g.values().iter().zip(back.values()) {
        assert_eq!(a.re.to_bits(), b.re.to_bits());
        assert_eq!(a.im.to_bits(), b.im.to_bits());
    }
}

#[test]
fn grid_file_rejections() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.qcg1");
    grid_io(&path, GridIo::Write(&random_grid(8, 1))).unwrap();
    let good = fs::read(&path).unwrap();

    let mut bad = good.clone();
    bad[0] = b'X';
    fs::write(&path, &bad).unwrap();
    assert!(matches!(grid_io(&path, GridIo::Read), Err(Error::Format(_))));

    fs::write(&path, &good[..good.len() - 3]).unwrap();
    assert!(matches!(grid_io(&path, GridIo::Read), Err(Error::Format(_))));

    let mut bad = good;
    bad[4..8].copy_from_slice(&12u32.to_le_bytes());
    fs::write(&path, &bad).unwrap();
    assert!(matches!(grid_io(&path, GridIo::Read), Err(Error::Precondition(_))));
}

#[test]
fn half_cylinder_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.hcf1");
    let s: Vec<f64> = (0..9).map(|i| 0.25 * i as f64).collect();
    let f = HalfCylinderField::from_fn(s, 16, |s, t| [(-0.7 * s).exp() * t.cos(), (-0.7 * s).exp() * t.sin()]).unwrap();
    write_half_cylinder(&path, &f).unwrap();
    assert_eq!(read_half_cylinder(&path).unwrap(), f);
}

#[test]
fn canonical_json_is_stable_text() {
    let claim = Claim::below("x", 0.1 + 0.2, 1.0);
    let text = String::from_utf8(canonical_json(&claim).unwrap()).unwrap();
    assert_eq!(
        text,
        "{\"measured\":0.30000000000000004,\"name\":\"x\",\"passed\":true,\"relation\":\"below\",\"target\":null,\"tolerance\":1}\n"
    );
}

#[test]
fn run_reports_structured_errors_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::new(
        Command::Qcmap { mu: MuSource::RadialStretch { sup: 0.99 }, p: 6.0, extent: 4.0 },
        dir.path().join("q"),
    );
    cfg.n = 64;
    let bundle = run(&cfg);
    let err = bundle.error.as_ref().unwrap();
    assert_eq!((err.kind, bundle.exit_code()), ("non_contraction", 3));
    assert!(err.rates.as_ref().is_some_and(|r| !r.is_empty()));

    cfg.n = 100;
    let bundle = run(&cfg);
    assert_eq!((bundle.error.as_ref().unwrap().kind, bundle.exit_code()), ("precondition", 2));

    // A grid too coarse for the 1e-2 profile tolerance is a check failure.
    cfg.n = 64;
    cfg.command = Command::Qcmap { mu: MuSource::RadialStretch { sup: 1.0 / 3.0 }, p: 4.0, extent: 4.0 };
    let bundle = run(&cfg);
    assert!(bundle.error.is_none());
    assert_eq!(bundle.exit_code(), 1);
    let failed: Vec<&str> = bundle.identities.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    assert_eq!(failed, ["radial_profile_error"]);

    cfg.n = 256;
    let bundle = run(&cfg);
    assert_eq!(bundle.exit_code(), 0, "{:?}", bundle.identities);
    bundle.write(&cfg.out).unwrap();
    let back = grid_io(&cfg.out.join("alpha.qcg1"), GridIo::Read).unwrap();
    assert_eq!(back.n(), 256);
}

#[test]
fn thread_count_does_not_change_payloads() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::new(Command::Dbar, dir.path());
    cfg.n_modes = 8;
    let one = run(&RunConfig { threads: Some(1), ..cfg.clone() });
    let two = run(&RunConfig { threads: Some(2), ..cfg.clone() });
    assert_eq!(one.exit_code(), 0);
    assert_eq!(one.identities, two.identities);
    assert_eq!(one.results, two.results);
    assert_eq!(one.artifacts, two.artifacts);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn grid_bytes_round_trip(seed in any::<u64>(), log_n in 3u32..6) {
        let g = random_grid(1 << log_n, seed);
        let mut bytes = Vec::new();
        g.write_qcg1(&mut bytes).unwrap();
        let back = GridField::read_qcg1(bytes.as_slice()).unwrap();
        prop_assert_eq!(back.values(), g.values());
    }

    #[test]
    fn claims_never_pass_on_nan(tol in 0.0f64..1.0, target in -1.0f64..1.0) {
        prop_assert!(!Claim::abs_within("a", f64::NAN, target, tol).passed);
        prop_assert!(!Claim::rel_within("r", f64::NAN, target, tol).passed);
        prop_assert!(!Claim::at_most("m", f64::NAN, tol).passed);
        prop_assert!(!Claim::at_least("l", f64::NAN, tol).passed);
    }
}

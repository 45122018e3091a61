//! The single-purpose subcommands.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::Path;

use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::config::{Command, MuSource, RunConfig};
use super::io::{grid_io, parse_profile_file, profile_canonical_json, read_half_cylinder, GridIo};
use super::report::{canonical_json, Artifact, Claim, ErrorReport};
use crate::asymptotics::{relative_asymptotics_fit, spectrum};
use crate::beltrami::{normalized_qc_map, radial_stretch, BeltramiCoefficient, GridField, QcMap};
use crate::contact::{
    binding_orbit_report, chart_grid, contact_check, linearized_flow, return_time, return_time_by_flow,
    sample_profile_form, FormClass, ZERO_REL_TOL,
};
use crate::error::{Error, Result};
use crate::leaves::{holomorphy_residual, solve_radial_profile, GirouxLeaf, LeafConfig};
use crate::profiles::{
    design_interpolation_curve, make_example_profile, validate_local_model, BindingProfile, ProfileKind, STRICT_TOL,
};
use crate::surface_cr::hodge::antilinear_form;
use crate::surface_cr::{
    collocation_size, dbar_solve_torus, fredholm_index_report, harmonic_defects, hodge_representative, l2_bound_check,
    manufactured_problem, newton_solve_model, perturbed_start, reconstruct, CRSolution, NewtonOptions, StructureField,
    TorusField, TorusOneForm,
};

/// Claims, payload and files of one subcommand or suite criterion.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub identities: Vec<Claim>,
    pub diagnostics: Vec<Claim>,
    pub results: Value,
    pub artifacts: Vec<Artifact>,
    pub failures: Vec<ErrorReport>,
    pub timings: BTreeMap<String, f64>,
}

/// The profile named by the config, or example 1 with `T = 1`, `k = 0.7`.
pub fn load_profile(cfg: &RunConfig) -> Result<BindingProfile> {
    match &cfg.profile {
        Some(path) => parse_profile_file(path),
        None => make_example_profile(ProfileKind::Example1, 1.0, 0.7),
    }
}

/// CSV artifact with `Display`-formatted (shortest round-trip) numbers.
pub fn csv_artifact(path: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<Artifact> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(f64::to_string))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(Artifact { path: path.into(), bytes })
}

fn json_artifact<T: serde::Serialize + ?Sized>(path: &str, value: &T) -> Result<Artifact> {
    Ok(Artifact { path: path.into(), bytes: canonical_json(value)? })
}

pub(crate) fn dispatch(cfg: &RunConfig) -> Result<Outcome> {
    match &cfg.command {
        Command::Validate { samples } => validate(cfg, *samples),
        Command::Flow { radii } => flow(cfg, *radii),
        Command::Leaf { r0, s_span, step } => leaf(cfg, *r0, *s_span, *step),
        Command::Spectrum { field } => spectrum_cmd(cfg, field.as_deref()),
        Command::Qcmap { mu, p, extent } => qcmap(cfg, mu, *p, *extent),
        Command::Dbar => dbar(cfg),
        Command::DesignCurve { delta, eps0, gamma1_at_0, kappa } => design(*delta, *eps0, *gamma1_at_0, *kappa),
        Command::Suite => super::suite::run_suite(cfg),
    }
}

fn validate(cfg: &RunConfig, samples: usize) -> Result<Outcome> {
    let p = load_profile(cfg)?;
    let rep = validate_local_model(&p, samples)?;
    let identities = rep
        .conditions
        .iter()
        .map(|c| {
            let floor = if matches!(c.condition, 1 | 6) { -STRICT_TOL } else { STRICT_TOL };
            Claim::at_least(format!("condition_{}.margin", c.condition), c.margin, floor).with_verdict(c.passed)
        })
        .collect();
    let rows = rep
        .grid
        .iter()
        .map(|&r| p.derived_quantities(r).map(|d| vec![r, d.mu, d.alpha, d.beta, d.big_a]))
        .collect::<Result<Vec<_>>>()?;
    Ok(Outcome {
        identities,
        results: json!({ "profile": p.to_doc(), "kappa": p.kappa(), "validation": rep }),
        artifacts: vec![csv_artifact("derived.csv", &["r", "mu", "alpha", "beta", "A"], rows)?],
        ..Outcome::default()
    })
}

/// Largest distance of the eigenvalues of the disk block of the linearized
/// flow at time `t` from `e^{±iβt}`.
pub fn floquet_error(profile: &BindingProfile, beta0: f64, t: f64) -> f64 {
    let block = linearized_flow(profile, t).fixed_view::<2, 2>(1, 1).into_owned();
    let want = Complex64::from_polar(1.0, beta0 * t);
    block.complex_eigenvalues().iter().map(|z| (z - want).norm().min((z - want.conj()).norm())).fold(0.0, f64::max)
}

/// `β(0)` from the axis jet: `γ₁(0)β(0) = −γ₁''(0)/γ₂''(0)`.
pub fn beta_at_axis(profile: &BindingProfile) -> Result<f64> {
    let j = profile.jet(0.0)?;
    Ok(-j.g1[2] / (j.g2[2] * j.g1[0]))
}

fn flow(cfg: &RunConfig, radii: usize) -> Result<Outcome> {
    let p = load_profile(cfg)?;
    let orbit = binding_orbit_report(&p);
    let g10 = p.jet(0.0)?.g1[0];
    let beta0 = beta_at_axis(&p)?;
    let floquet = [0.5, orbit.period, 7.3].iter().map(|&t| floquet_error(&p, beta0, t)).fold(0.0, f64::max);
    let x = g10 * beta0;
    let oracle_nondegenerate = (x - x.round()).abs() > 1e-12;
    let identities = vec![
        Claim::abs_within("period", orbit.period, TAU * g10, 1e-12),
        Claim::at_most("floquet_eigenvalue_error", floquet, 1e-12),
        Claim::equals(
            "nondegenerate",
            f64::from(u8::from(orbit.nondegenerate)),
            f64::from(u8::from(oracle_nondegenerate)),
        ),
    ];
    let rows = (1..=radii)
        .map(|i| {
            let r = p.r_max() * i as f64 / (radii + 1) as f64;
            Ok(vec![r, return_time(&p, r)?, return_time_by_flow(&p, r, 1e-3)?])
        })
        .collect::<Result<Vec<_>>>()?;
    let rt_gap = rows.iter().map(|v| (v[1] - v[2]).abs()).fold(0.0, f64::max);
    let samples = sample_profile_form(&p, &chart_grid(4, 8, 16, p.r_max()))?;
    let contact = contact_check(&samples)?;
    let diagnostics = vec![
        Claim::at_most("return_time_flow_gap", rt_gap, 1e-6),
        Claim::at_least("contact_min_wedge_rel", contact.min / contact.max_abs, ZERO_REL_TOL)
            .with_verdict(contact.class == FormClass::Contact),
    ];
    Ok(Outcome {
        identities,
        diagnostics,
        results: json!({ "orbit": orbit, "beta0": beta0, "contact": contact }),
        artifacts: vec![csv_artifact("return_times.csv", &["r", "closed_form", "by_flow"], rows)?],
        ..Outcome::default()
    })
}

fn leaf(cfg: &RunConfig, r0: f64, s_span: f64, step: f64) -> Result<Outcome> {
    let p = load_profile(cfg)?;
    let lc = LeafConfig { step, ..LeafConfig::default() };
    let leaf = solve_radial_profile(&p, r0, s_span, &lc)?;
    let mut csv = Vec::new();
    leaf.write_csv(&mut csv)?;
    let mut meta = leaf.metadata();
    meta["seed"] = json!(cfg.seed);
    meta["kappa"] = json!(p.kappa());
    let kappa_hat = leaf.kappa_hat.unwrap_or(f64::NAN);
    let monotone = leaf.r_of_s.windows(2).all(|w| w[1] < w[0]) && leaf.a_of_s.windows(2).all(|w| w[1] > w[0]);
    let c_var = leaf.c_variation().unwrap_or(f64::NAN);
    let g = GirouxLeaf::new(0.0, leaf);
    let residual = holomorphy_residual(&g, &p)?;
    Ok(Outcome {
        identities: vec![Claim::abs_within("kappa_hat", kappa_hat, p.kappa(), 1e-3)],
        diagnostics: vec![
            Claim::at_most("holomorphy_residual", residual, 1e-8),
            Claim::below("c_variation", c_var, 0.01),
            Claim::holds("r_decreasing_a_increasing", monotone),
            Claim::holds("injective", g.is_injective()),
        ],
        results: json!({ "metadata": meta, "holomorphy_residual": residual }),
        artifacts: vec![Artifact { path: "leaf.csv".into(), bytes: csv }, json_artifact("leaf_meta.json", &meta)?],
        ..Outcome::default()
    })
}

/// Largest negative `κ + l`.
pub fn largest_negative_eigenvalue(kappa: f64) -> f64 {
    kappa + ((-kappa).ceil() - 1.0)
}

fn spectrum_cmd(cfg: &RunConfig, field: Option<&Path>) -> Result<Outcome> {
    let p = load_profile(cfg)?;
    let kappa = p.kappa();
    let n = cfg.n_modes;
    let sp = spectrum(kappa, n, n / 2 + 1)?;
    let mut out = spectrum_claims(kappa, &sp);
    let fit = match field {
        Some(path) => {
            let f = relative_asymptotics_fit(&read_half_cylinder(path)?)?;
            json!({ "lambda_hat": f.lambda_hat, "winding": f.winding, "remainder_rate": f.remainder_rate })
        }
        None => Value::Null,
    };
    out.results = json!({ "kappa": kappa, "N": n, "clusters": sp, "field_fit": fit });
    out.artifacts = vec![csv_artifact(
        "spectrum.csv",
        &["l", "value", "multiplicity", "deviation"],
        sp.iter().map(|c| vec![c.l as f64, c.value, c.multiplicity as f64, c.deviation]),
    )?];
    Ok(out)
}

/// Claims on a computed spectrum: `κ + l` to `10⁻⁸`, multiplicity 2 and the
/// largest negative eigenvalue.
pub fn spectrum_claims(kappa: f64, sp: &[crate::asymptotics::EigenCluster]) -> Outcome {
    let dev = sp.iter().map(|c| c.deviation).fold(0.0, f64::max);
    let bad_mult = sp.iter().filter(|c| c.multiplicity != 2).count();
    let neg = sp.iter().filter(|c| c.value < 0.0).map(|c| c.value).fold(f64::NEG_INFINITY, f64::max);
    Outcome {
        identities: vec![
            Claim::at_most("eigenvalue_deviation", dev, 1e-8),
            Claim::equals("clusters_without_multiplicity_2", bad_mult as f64, 0.0),
            Claim::abs_within("largest_negative_eigenvalue", neg, largest_negative_eigenvalue(kappa), 1e-8),
        ],
        ..Outcome::default()
    }
}

/// `K = (1 + m)/(1 − m)` for `‖μ‖∞ = m`.
pub fn dilatation(sup: f64) -> f64 {
    (1.0 + sup) / (1.0 - sup)
}

/// `max_{|z| ≤ 1} | |α(z)| − |z|^K |`.
pub fn radial_profile_error(map: &QcMap, k: f64) -> f64 {
    let alpha = map.alpha();
    alpha
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| alpha.point_at(*i).norm() <= 1.0)
        .map(|(i, a)| (a.norm() - alpha.point_at(i).norm().powf(k)).abs())
        .fold(0.0, f64::max)
}

/// Solver-health claims shared by `qcmap` and the suite.
pub fn qcmap_diagnostics(map: &QcMap) -> Vec<Claim> {
    vec![
        Claim::below("contraction_rate", map.contraction_rate, 1.0),
        Claim::at_most("iterations_minus_prediction", map.iterations.abs_diff(map.predicted_iterations) as f64, 2.0),
        Claim::at_least("jacobian_min", map.jacobian_min, 0.0).with_verdict(map.jacobian_ok),
    ]
}

fn grid_bytes(g: &GridField) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    g.write_qcg1(&mut buf)?;
    Ok(buf)
}

fn qcmap(cfg: &RunConfig, source: &MuSource, p: f64, extent: f64) -> Result<Outcome> {
    let (mu, k) = match source {
        MuSource::RadialStretch { sup } => {
            let k = dilatation(*sup);
            (radial_stretch(cfg.n, extent, k, 0.0)?, Some(k))
        }
        MuSource::File(path) => (BeltramiCoefficient::new(grid_io(path, GridIo::Read)?)?, None),
    };
    let map = normalized_qc_map(&mu, p, cfg.tol)?;
    let identities = match k {
        Some(k) => vec![Claim::at_most("radial_profile_error", radial_profile_error(&map, k), 1e-2)],
        None => Vec::new(),
    };
    Ok(Outcome {
        identities,
        diagnostics: qcmap_diagnostics(&map),
        results: json!({
            "mu_sup": mu.sup_norm(),
            "dilatation": k,
            "p": p,
            "iterations": map.iterations,
            "predicted_iterations": map.predicted_iterations,
            "contraction_rate": map.contraction_rate,
            "jacobian_min": map.jacobian_min,
        }),
        artifacts: vec![Artifact { path: "alpha.qcg1".into(), bytes: grid_bytes(&map.alpha())? }],
        ..Outcome::default()
    })
}

/// Seeded field with uniform coefficients in the unit square.
pub fn random_torus_field(n_modes: usize, seed: u64) -> TorusField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = 2 * n_modes + 1;
    let coeffs: Vec<Complex64> =
        (0..w * w).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let nn = n_modes as i64;
    TorusField::from_coeff_fn(n_modes, false, |m, n| coeffs[((m + nn) * (2 * nn + 1) + n + nn) as usize])
}

/// Fredholm counts, the exact Hodge representative for `j = i` and the
/// `∂̄` reconstruction error at `N` modes.
pub fn torus_identities(n_modes: usize, seed: u64) -> Result<(Vec<Claim>, Value)> {
    let fred = fredholm_index_report(n_modes)?;
    let std_rep = hodge_representative([1.0, 0.0], &StructureField::standard(collocation_size(n_modes)), n_modes)?;
    let exact = TorusOneForm::constant(n_modes, [1.0, 0.0]);
    let hodge_gap = std_rep.sub(&exact).coeff_norm();
    let sigma = antilinear_form(random_torus_field(n_modes, seed));
    let recon = reconstruct(&dbar_solve_torus(&sigma)).sub(&sigma).coeff_norm();
    let claims = vec![
        Claim::equals(format!("N{n_modes}.ker_dim"), fred.ker_dim as f64, 2.0),
        Claim::equals(format!("N{n_modes}.coker_dim"), fred.coker_dim as f64, 2.0),
        Claim::equals(format!("N{n_modes}.index"), fred.index as f64, 0.0),
        Claim::equals(format!("N{n_modes}.hodge_class_10_minus_ds"), hodge_gap, 0.0),
        Claim::below(format!("N{n_modes}.dbar_reconstruction_error"), recon, 1e-12),
    ];
    Ok((claims, serde_json::to_value(&fred)?))
}

fn solution_artifacts(sol: &CRSolution) -> Result<Vec<Artifact>> {
    let tf = |path: &str, f: &TorusField| -> Result<Artifact> {
        let mut bytes = Vec::new();
        f.write_to(&mut bytes)?;
        Ok(Artifact { path: path.into(), bytes })
    };
    Ok(vec![
        tf("solution/bf.tfield", &sol.bf)?,
        tf("solution/gamma_ds.tfield", &sol.gamma.ds)?,
        tf("solution/gamma_dt.tfield", &sol.gamma.dt)?,
        json_artifact("solution/report.json", &sol.report)?,
    ])
}

/// Largest truncation used for the Newton solve in `dbar`.
pub const DBAR_NEWTON_MODES: usize = 6;

fn dbar(cfg: &RunConfig) -> Result<Outcome> {
    let n = cfg.n_modes;
    let (identities, fred) = torus_identities(n, cfg.seed)?;
    let m = collocation_size(n);
    let j = StructureField::conjugated(m, |s, t| Matrix2::new(1.0, 0.1 * s.cos() * (2.0 * t).cos(), 0.0, 1.0))?;
    let h = hodge_representative([1.0, 2.0], &j, n)?;
    let (closed, coclosed) = harmonic_defects(&h, &j);
    let periods = h.line_periods(64);

    let nn = n.min(DBAR_NEWTON_MODES);
    let prob = manufactured_problem(cfg.seed, nn)?;
    let init = perturbed_start(&prob.exact, cfg.seed.wrapping_add(1000), 1e-2);
    let sol = newton_solve_model(&prob.data, &prob.jdep, &init, &NewtonOptions { tol: cfg.tol, ..Default::default() })?;
    let l2 = l2_bound_check(&sol, &prob.data.u0_lambda);
    let err = sol.bf.sub(&prob.exact.bf).coeff_norm();
    let diagnostics = vec![
        Claim::at_most("hodge_sheared.closed_defect", closed, 1e-8),
        Claim::at_most("hodge_sheared.coclosed_defect", coclosed, 1e-8),
        Claim::abs_within("hodge_sheared.period_s", periods[0] / TAU, 1.0, 1e-12),
        Claim::abs_within("hodge_sheared.period_t", periods[1] / TAU, 2.0, 1e-12),
        Claim::below("newton.residual", sol.report.residual, 1e-8),
        Claim::at_least("newton.convergence_exponent", sol.report.convergence_exponent.unwrap_or(f64::NAN), 1.8),
        Claim::at_most("newton.error_vs_exact", err, 1e-8),
        Claim::at_most(
            "newton.l2_gamma_minus_bound",
            l2.gamma_norm - l2.rhs_norm,
            crate::surface_cr::diagnostics::L2_SLACK,
        ),
    ];
    Ok(Outcome {
        identities,
        diagnostics,
        results: json!({ "fredholm": fred, "newton_modes": nn, "newton": sol.report, "l2_bound": l2 }),
        artifacts: solution_artifacts(&sol)?,
        ..Outcome::default()
    })
}

fn design(delta: f64, eps0: f64, g10: f64, kappa: f64) -> Result<Outcome> {
    let p = design_interpolation_curve(delta, eps0, g10, kappa)?;
    let rep = validate_local_model(&p, 256)?;
    Ok(Outcome {
        identities: vec![
            Claim::abs_within("gamma1_at_0", p.gamma1_at_0(), g10, 1e-15),
            Claim::abs_within("kappa", p.kappa(), kappa, 1e-12),
        ],
        diagnostics: vec![Claim::holds("validation_passed", rep.passed)],
        results: json!({ "knots": p.knots().len(), "validation": rep.conditions }),
        artifacts: vec![Artifact { path: "profile.json".into(), bytes: profile_canonical_json(&p)? }],
        ..Outcome::default()
    })
}

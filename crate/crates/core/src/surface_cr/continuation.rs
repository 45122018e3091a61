//! Continuation in `τ` from the trivial solution with the leaf's `j_τ`
//! family transplanted to the torus.
//!
//! A stretch of leaf is wrapped around the `s`-circle by
//! `s_ℓ(s) = s_a + (s_b − s_a)(1 − cos s)/2` and made `t`-independent.
//! The data `u₀*λ = γ₁ dt` and `da₀ = γ₁ ds` make `(ζ, σ) = (0, 0)` a
//! solution for `j = i`; `j_f` is `j_τ` with `τA q` replaced by `f · A q`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::diagnostics::{family_monotonicity_check, FamilyReport};
use super::field::{collocation_size, node, TorusField};
use super::forms::GridForm;
use super::newton::{newton_solve_model, AppendixJ, CRSolution, CrData, CrGuess, NewtonOptions};
use crate::contact::return_time;
use crate::error::{Error, Result};
use crate::leaves::{appendix_frames, LeafProfile};
use crate::profiles::BindingProfile;

/// Transplanted data and structure family.
#[derive(Debug, Clone, PartialEq)]
pub struct AppendixModel {
    pub data: CrData,
    pub jdep: AppendixJ,
    /// `min 2π/|β(r)|` over the transplanted radii.
    pub t_return: f64,
    pub s_range: (f64, f64),
}

/// Leaf parameter of torus coordinate `s`.
pub fn transplant(s: f64, s_range: (f64, f64)) -> f64 {
    s_range.0 + (s_range.1 - s_range.0) * 0.5 * (1.0 - s.cos())
}

/// Build the model on `N` modes from a leaf of `profile` over `s_range`.
pub fn appendix_model(
    profile: &BindingProfile,
    leaf: &LeafProfile,
    s_range: (f64, f64),
    n_modes: usize,
) -> Result<AppendixModel> {
    if !(s_range.0 >= 0.0 && s_range.1 > s_range.0) {
        return Err(Error::Precondition(format!("bad leaf range {s_range:?}")));
    }
    let m = collocation_size(n_modes);
    let mut rows = Vec::with_capacity(m);
    let mut t_return = f64::INFINITY;
    for i in 0..m {
        let (s, _) = node(m, i * m);
        let fr = appendix_frames(profile, 1.0, 0.0, transplant(s, s_range), leaf)?;
        let g1 = profile.jet(fr.r)?.g1[0];
        t_return = t_return.min(return_time(profile, fr.r)?);
        rows.push((-fr.j_tau[(0, 0)], g1));
    }
    let c = (0..m * m).map(|k| rows[k / m].0).collect();
    let g1: Vec<Complex64> = (0..m * m).map(|k| Complex64::new(rows[k / m].1, 0.0)).collect();
    let zero = vec![Complex64::new(0.0, 0.0); m * m];
    let u0_lambda = GridForm { m, s: zero.clone(), t: g1.clone() };
    let da0 = GridForm { m, s: g1, t: zero };
    Ok(AppendixModel { data: CrData { n_modes, u0_lambda, da0 }, jdep: AppendixJ { m, c }, t_return, s_range })
}

/// A `τ`-sweep and its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Continuation {
    pub taus: Vec<f64>,
    pub solutions: Vec<CRSolution>,
    pub report: ContinuationReport,
}

/// Scalar summary of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuationReport {
    pub taus: Vec<f64>,
    pub sup_norms: Vec<f64>,
    /// `(max − min)/mean` of `‖f_τ‖∞/τ` over the positive `τ`.
    pub linearity_spread: f64,
    pub family: FamilyReport,
    pub max_residual: f64,
}

/// Solve at every `τ` (pinning `mean f = τ`) from the trivial start, in
/// parallel, and check the resulting family.
pub fn appendix_continuation(model: &AppendixModel, taus: &[f64], opts: &NewtonOptions) -> Result<Continuation> {
    if taus.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Precondition("τ values must increase".into()));
    }
    let n_modes = model.data.n_modes;
    let solutions = taus
        .par_iter()
        .map(|&tau| {
            let init = CrGuess { bf: TorusField::constant(n_modes, Complex64::new(0.0, tau)), sigma: [0.0, 0.0] };
            newton_solve_model(&model.data, &model.jdep, &init, &NewtonOptions { f_mean: Some(tau), ..*opts })
        })
        .collect::<Result<Vec<_>>>()?;
    let m = model.jdep.m;
    let family: Vec<TorusField> = solutions.iter().map(|s| s.f()).collect();
    let sup_norms: Vec<f64> = family.iter().map(|f| f.sup_norm(m)).collect();
    let ratios: Vec<f64> = taus.iter().zip(&sup_norms).filter(|(t, _)| **t > 0.0).map(|(t, n)| n / t).collect();
    let linearity_spread = if ratios.is_empty() {
        0.0
    } else {
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &r| (a.min(r), b.max(r)));
        (hi - lo) / mean
    };
    let report = ContinuationReport {
        taus: taus.to_vec(),
        sup_norms,
        linearity_spread,
        family: family_monotonicity_check(&family, model.t_return),
        max_residual: solutions.iter().map(|s| s.report.residual).fold(0.0, f64::max),
    };
    Ok(Continuation { taus: taus.to_vec(), solutions, report })
}

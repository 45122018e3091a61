//! Holomorphic Giroux leaves near the binding.
//!
//! A leaf is the half-cylinder `u_α(s,t) = (t, r(s) e^{iα})` lifted by
//! `a(s) = ∫ γ₁(r)`. It is holomorphic for the structure
//! `J η₁ = h η₂`, `J η₂ = −η₁/h` in the frame `η₁ = ∂r`,
//! `η₂ = −γ₂ ∂θ + γ₁ ∂φ` exactly when `r' = γ₁'/(μ h)`. With
//! `h = 1/(r γ₁)` near the axis this becomes `r' = Λ(r) r`, `Λ → κ`.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::io::Write;

use nalgebra::{Matrix2, Matrix2x3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{cumulative_simpson, fd_derivative4, linear_fit, rk4_step, simpson, smoothstep5};
use crate::profiles::BindingProfile;

/// Integration and complex-structure settings for leaves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeafConfig {
    /// RK4 step in `s`.
    pub step: f64,
    /// Below this radius `h = 1/(r γ₁)` exactly.
    pub r_small: f64,
    /// Above `1 − eps0` the structure is `h ≡ 1`.
    pub eps0: f64,
    /// Integration stops once `r` drops below this value.
    pub r_stop: f64,
}

impl Default for LeafConfig {
    fn default() -> Self {
        Self { step: 1e-3, r_small: 0.1, eps0: 0.1, r_stop: 1e-12 }
    }
}

fn fingerprint(profile: &BindingProfile) -> u64 {
    let doc = serde_json::to_string(&profile.to_doc()).expect("profile documents serialize");
    let mut h = DefaultHasher::new();
    doc.hash(&mut h);
    h.finish()
}

/// The function `h(r)` of the admissible structure.
///
/// `h = 1/(r γ₁)` on `(0, r_small]`, `h = 1` on `[1 − eps0, ∞)` and in
/// between `ln h = (1 − S) · (−ln r − L(r))` with the quintic smooth step
/// `S` and `L` the second-order Taylor extension of `ln γ₁` from `r_small`.
pub fn structure_h(profile: &BindingProfile, cfg: &LeafConfig, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Precondition("the frame degenerates at r = 0".into()));
    }
    let hi = 1.0 - cfg.eps0;
    if r >= hi {
        return Ok(1.0);
    }
    if r <= cfg.r_small {
        let g1 = profile.jet(r)?.g1[0];
        if !(g1 > 0.0) {
            return Err(Error::Precondition(format!("gamma_1({r}) = {g1} is not positive")));
        }
        return Ok(1.0 / (r * g1));
    }
    let j = profile.jet(cfg.r_small)?;
    let g = j.g1;
    if !(g[0] > 0.0) {
        return Err(Error::Precondition("gamma_1 must be positive up to r_small".into()));
    }
    let l1 = g[1] / g[0];
    let l2 = g[2] / g[0] - l1 * l1;
    let dr = r - cfg.r_small;
    let ln_g = g[0].ln() + l1 * dr + 0.5 * l2 * dr * dr;
    let (s, _, _) = smoothstep5(dr / (hi - cfg.r_small));
    Ok(((1.0 - s) * (-r.ln() - ln_g)).exp())
}

/// Right-hand side of the leaf equation, `γ₁'/(μ h)`.
pub fn leaf_rhs(profile: &BindingProfile, cfg: &LeafConfig, r: f64) -> Result<f64> {
    let j = profile.u_jet(r)?;
    if r <= cfg.r_small {
        return Ok(r * j.p[0] * j.p[1] / j.w1());
    }
    let h = structure_h(profile, cfg, r)?;
    Ok(j.p[1] / (j.w1() * h))
}

/// Solved radial profile of a Giroux leaf.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeafProfile {
    pub s_grid: Vec<f64>,
    pub r_of_s: Vec<f64>,
    pub a_of_s: Vec<f64>,
    /// Fitted decay exponent, when the tail has enough samples.
    pub kappa_hat: Option<f64>,
    /// Fitted limit of `r(s) e^{−κ̂ s}`.
    pub c_inf: Option<f64>,
    pub config: LeafConfig,
    profile_id: u64,
}

impl LeafProfile {
    /// Wrap externally produced samples on a uniform grid as a leaf profile
    /// of `profile`, fitting the decay exponent when possible.
    pub fn from_samples(
        profile: &BindingProfile,
        s_grid: Vec<f64>,
        r_of_s: Vec<f64>,
        a_of_s: Vec<f64>,
        config: LeafConfig,
    ) -> Result<Self> {
        if s_grid.len() < 2 || r_of_s.len() != s_grid.len() || a_of_s.len() != s_grid.len() {
            return Err(Error::Precondition("leaf samples need matching lengths of at least 2".into()));
        }
        let mut out = LeafProfile {
            s_grid,
            r_of_s,
            a_of_s,
            kappa_hat: None,
            c_inf: None,
            config,
            profile_id: fingerprint(profile),
        };
        if let Ok((k, c)) = decay_fit(&out) {
            out.kappa_hat = Some(k);
            out.c_inf = Some(c);
        }
        Ok(out)
    }

    /// Uniform step of the grid.
    pub fn step(&self) -> f64 {
        self.s_grid[1] - self.s_grid[0]
    }

    /// Write the samples as CSV `s,r,a`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["s", "r", "a"])?;
        for i in 0..self.s_grid.len() {
            out.write_record(&[self.s_grid[i].to_string(), self.r_of_s[i].to_string(), self.a_of_s[i].to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Metadata sidecar: fitted exponent, limit and integrator settings.
    pub fn metadata(&self) -> serde_json::Value {
        serde_json::json!({
            "kappa_hat": self.kappa_hat,
            "c_inf": self.c_inf,
            "integrator": "rk4",
            "step": self.config.step,
            "r_small": self.config.r_small,
            "eps0": self.config.eps0,
            "r_stop": self.config.r_stop,
            "samples": self.s_grid.len(),
        })
    }

    /// Relative variation of `r e^{−κ̂ s}` over the last quartile.
    pub fn c_variation(&self) -> Option<f64> {
        let k = self.kappa_hat?;
        let n = self.r_of_s.len();
        let c: Vec<f64> = (3 * n / 4..n).map(|i| self.r_of_s[i] * (-k * self.s_grid[i]).exp()).collect();
        let max = c.iter().cloned().fold(f64::MIN, f64::max);
        let min = c.iter().cloned().fold(f64::MAX, f64::min);
        Some((max - min) / max)
    }
}

/// Integrate the leaf equation from `r(0) = r0` over `[0, s_span]` with
/// fixed-step RK4, accumulating `a(s) = ∫ γ₁(r)` by cumulative Simpson.
pub fn solve_radial_profile(profile: &BindingProfile, r0: f64, s_span: f64, cfg: &LeafConfig) -> Result<LeafProfile> {
    if !(r0 > 0.0 && r0 < profile.r_max()) {
        return Err(Error::out_of_range("r0", r0, 0.0, profile.r_max()));
    }
    if !(s_span > 0.0) {
        return Err(Error::Precondition(format!("s_span = {s_span} must be positive")));
    }
    if r0 < cfg.r_stop {
        return Err(Error::Numeric(format!("r0 = {r0} is below the stop radius {}", cfg.r_stop)));
    }
    let n = (s_span / cfg.step).round().max(1.0) as usize;
    let h = s_span / n as f64;
    let rhs = |y: &[f64; 1]| [leaf_rhs(profile, cfg, y[0]).unwrap_or(f64::NAN)];
    let mut r = Vec::with_capacity(n + 1);
    r.push(r0);
    for _ in 0..n {
        let y = rk4_step(&rhs, &[*r.last().expect("nonempty")], h)[0];
        if !y.is_finite() {
            return Err(Error::Numeric("leaf equation left the profile domain".into()));
        }
        if y < cfg.r_stop {
            break;
        }
        r.push(y);
    }
    let s: Vec<f64> = (0..r.len()).map(|i| i as f64 * h).collect();
    let g1: Vec<f64> = r.iter().map(|&x| profile.jet(x).map(|j| j.g1[0])).collect::<Result<_>>()?;
    let a = cumulative_simpson(&g1, h);
    LeafProfile::from_samples(profile, s, r, a, *cfg)
}

fn decay_fit(leaf: &LeafProfile) -> Result<(f64, f64)> {
    let n = leaf.r_of_s.len();
    let start = 3 * n / 4;
    if n - start < 16 {
        return Err(Error::Precondition(format!("only {} samples in the last quartile, need 16", n - start)));
    }
    if let Some(i) = leaf.r_of_s.iter().position(|&r| !(r > 0.0)) {
        return Err(Error::Precondition(format!("r sample {i} is not positive")));
    }
    let x = &leaf.s_grid[start..];
    let y: Vec<f64> = leaf.r_of_s[start..].iter().map(|r| r.ln()).collect();
    let (b, k) = linear_fit(x, &y);
    Ok((k, b.exp()))
}

/// Least-squares slope of `ln r` against `s` over the last quartile.
pub fn decay_exponent_fit(leaf: &LeafProfile) -> Result<f64> {
    decay_fit(leaf).map(|(k, _)| k)
}

/// A Giroux leaf: page angle plus its radial profile.
#[derive(Debug, Clone, PartialEq)]
pub struct GirouxLeaf {
    pub alpha: f64,
    pub profile: LeafProfile,
}

impl GirouxLeaf {
    /// Leaf at page angle `alpha` (reduced to `[0, 2π)`).
    pub fn new(alpha: f64, profile: LeafProfile) -> Self {
        Self { alpha: crate::numerics::wrap_angle(alpha), profile }
    }

    /// `ũ_α` at grid node `i` and angle `t`: `(a, θ, r, φ)`.
    pub fn point(&self, i: usize, t: f64) -> [f64; 4] {
        [self.profile.a_of_s[i], crate::numerics::wrap_angle(t), self.profile.r_of_s[i], self.alpha]
    }

    /// Injective on the grid: radii strictly decreasing and inside the disk.
    pub fn is_injective(&self) -> bool {
        let r = &self.profile.r_of_s;
        r.windows(2).all(|w| w[1] < w[0]) && r.iter().all(|&x| (0.0..=1.0).contains(&x))
    }
}

/// 2×2 matrix in the contact frame `{η₁, η₂}`.
pub type FrameMatrix2 = Matrix2<f64>;

/// The admissible structure `J` at radius `r` in the frame `{η₁, η₂}`.
pub fn admissible_j(profile: &BindingProfile, r: f64, cfg: &LeafConfig) -> Result<FrameMatrix2> {
    let h = structure_h(profile, cfg, r)?;
    Ok(Matrix2::new(0.0, -1.0 / h, h, 0.0))
}

/// Compatibility values `dλ(η₁, Jη₁) = h μ` and `dλ(η₂, Jη₂) = μ / h`.
pub fn compatibility(profile: &BindingProfile, r: f64, cfg: &LeafConfig) -> Result<(f64, f64)> {
    let h = structure_h(profile, cfg, r)?;
    let mu = profile.mu(r)?;
    Ok((h * mu, mu / h))
}

/// Max-norm of `r'(s) − γ₁'/(μ h)` over the leaf grid, with `r'` from
/// fourth-order finite differences of the samples.
pub fn holomorphy_residual(leaf: &GirouxLeaf, profile: &BindingProfile) -> Result<f64> {
    let lp = &leaf.profile;
    if lp.profile_id != fingerprint(profile) {
        return Err(Error::Precondition("leaf was solved for a different profile".into()));
    }
    if lp.r_of_s.len() < 5 {
        return Err(Error::Precondition("need at least five leaf samples".into()));
    }
    let dr = fd_derivative4(&lp.r_of_s, lp.step());
    let mut worst = 0.0f64;
    for (r, d) in lp.r_of_s.iter().zip(&dr) {
        let rhs = leaf_rhs(profile, &lp.config, *r)?;
        worst = worst.max((d - rhs).abs());
    }
    Ok(worst)
}

/// Appendix frame objects at one leaf point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AppendixFrames {
    pub s: f64,
    pub r: f64,
    /// Coefficients of `π_λ(v₁, v₂, v₃)` on `η₁` (row 0) and `η₂` (row 1).
    pub pi_matrix: Matrix2x3<f64>,
    /// `Tφ_τ = (1 0; τA 1)`.
    pub flow_matrix: FrameMatrix2,
    pub j_tau: FrameMatrix2,
    pub j_diff: FrameMatrix2,
    /// `A(r) r γ₁²(r) ρ⁻¹` at `s`, with `ρ = e^{−s}`.
    pub coefficient: f64,
    /// Log-log slope of the coefficient against `ρ` over the leaf tail.
    pub coeff_exponent: f64,
    /// True when `A` vanishes on the whole tail. The exponent is then fitted
    /// to the order-`r` envelope `r² γ₁² ρ⁻¹` that bounds the coefficient.
    pub coefficient_vanishes: bool,
}

/// `j_τ` in the frame `{η₁, η₂}` with `q = r γ₁`:
/// `(−τAq, −1; 1 + τ²A²q², τAq)`.
pub fn j_tau(a: f64, q: f64, tau: f64) -> FrameMatrix2 {
    let x = tau * a * q;
    Matrix2::new(-x, -1.0, 1.0 + x * x, x)
}

fn interp_log_r(leaf: &LeafProfile, s: f64) -> Result<f64> {
    let n = leaf.s_grid.len();
    let h = leaf.step();
    let x = s / h;
    if !(x >= 0.0 && x <= (n - 1) as f64) {
        return Err(Error::out_of_range("s", s, 0.0, leaf.s_grid[n - 1]));
    }
    let i = (x.floor() as usize).min(n - 2);
    let w = x - i as f64;
    Ok(((1.0 - w) * leaf.r_of_s[i].ln() + w * leaf.r_of_s[i + 1].ln()).exp())
}

/// Projection, linearized flow, induced structures and the boundedness
/// exponent along a leaf.
pub fn appendix_frames(
    profile: &BindingProfile,
    tau: f64,
    sigma: f64,
    s: f64,
    leaf: &LeafProfile,
) -> Result<AppendixFrames> {
    let r = interp_log_r(leaf, s)?;
    if !(r > 1e-300) {
        return Err(Error::Numeric(format!("r({s}) = {r} is below the machine threshold")));
    }
    let j = profile.jet(r)?;
    let d = profile.derived_quantities(r)?;
    let (g1, dg1, dg2) = (j.g1[0], j.g1[1], j.g2[1]);
    let pi_matrix = Matrix2x3::new(0.0, 1.0, 0.0, dg1 / d.mu, 0.0, dg2 / d.mu);
    let flow_matrix = Matrix2::new(1.0, 0.0, tau * d.big_a, 1.0);
    let q = r * g1;
    let jt = j_tau(d.big_a, q, tau);
    let j_diff = jt - j_tau(d.big_a, q, sigma);
    let coefficient = d.big_a * r * g1 * g1 * s.exp();

    // Exponent fit over the last half of the leaf.
    let n = leaf.s_grid.len();
    let mut log_rho = Vec::new();
    let mut log_c = Vec::new();
    let mut log_env = Vec::new();
    let mut vanishes = true;
    for i in n / 2..n {
        let (si, ri) = (leaf.s_grid[i], leaf.r_of_s[i]);
        let di = profile.derived_quantities(ri)?;
        let gi = profile.jet(ri)?.g1[0];
        let c = di.big_a * ri * gi * gi * si.exp();
        if c != 0.0 {
            vanishes = false;
        }
        log_rho.push(-si);
        log_c.push(c.abs().ln());
        log_env.push((ri * ri * gi * gi).ln() + si);
    }
    let y = if vanishes { &log_env } else { &log_c };
    let (_, slope) = linear_fit(&log_rho, y);
    Ok(AppendixFrames {
        s,
        r,
        pi_matrix,
        flow_matrix,
        j_tau: jt,
        j_diff,
        coefficient,
        coeff_exponent: slope,
        coefficient_vanishes: vanishes,
    })
}

/// A nondecreasing `[0, 1]`-valued test function for the energy.
pub trait TestFunction: Sync {
    fn value(&self, a: f64) -> f64;
    fn derivative(&self, a: f64) -> f64;
}

/// Quintic smooth step from 0 to 1 on `[center − half_width, center + half_width]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothStep {
    pub center: f64,
    pub half_width: f64,
}

impl TestFunction for SmoothStep {
    fn value(&self, a: f64) -> f64 {
        smoothstep5((a - self.center + self.half_width) / (2.0 * self.half_width)).0.clamp(0.0, 1.0)
    }

    fn derivative(&self, a: f64) -> f64 {
        smoothstep5((a - self.center + self.half_width) / (2.0 * self.half_width)).1 / (2.0 * self.half_width)
    }
}

/// Constant test function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantTest(pub f64);

impl TestFunction for ConstantTest {
    fn value(&self, _: f64) -> f64 {
        self.0
    }

    fn derivative(&self, _: f64) -> f64 {
        0.0
    }
}

/// Slack for rounding in the monotonicity check of test functions.
const MONOTONE_TOL: f64 = 1e-12;

/// Default energy family: 8 smooth steps with centers at
/// `a_min + (j+1)/9 · (a_max − a_min)` and half-width `(a_max − a_min)/18`.
pub fn smoothstep_family(a_min: f64, a_max: f64) -> Vec<SmoothStep> {
    let range = a_max - a_min;
    (0..8).map(|j| SmoothStep { center: a_min + (j + 1) as f64 / 9.0 * range, half_width: range / 18.0 }).collect()
}

/// Lower bound for the energy: the largest `∫ ũ* d(φ λ)` over the family,
/// `2π ∫ [φ'(a) a' γ₁(r) + φ(a) γ₁'(r) r'] ds` on the truncated leaf.
pub fn energy_estimate(leaf: &GirouxLeaf, profile: &BindingProfile, family: &[&dyn TestFunction]) -> Result<f64> {
    let lp = &leaf.profile;
    let h = lp.step();
    let n = lp.s_grid.len();
    if n < 5 {
        return Err(Error::Precondition("need at least five leaf samples".into()));
    }
    let mut sorted_a = lp.a_of_s.clone();
    sorted_a.sort_by(f64::total_cmp);
    for (k, phi) in family.iter().enumerate() {
        let mut prev = f64::NEG_INFINITY;
        for &a in &sorted_a {
            let v = phi.value(a);
            if !(0.0..=1.0).contains(&v) || v < prev - MONOTONE_TOL || phi.derivative(a) < -MONOTONE_TOL {
                return Err(Error::Precondition(format!(
                    "test function {k} is not nondecreasing into [0, 1] at a = {a}"
                )));
            }
            prev = v;
        }
    }
    let da = fd_derivative4(&lp.a_of_s, h);
    let dr = fd_derivative4(&lp.r_of_s, h);
    let jets: Vec<[f64; 2]> =
        lp.r_of_s.iter().map(|&r| profile.jet(r).map(|j| [j.g1[0], j.g1[1]])).collect::<Result<_>>()?;
    let mut best = f64::NEG_INFINITY;
    for phi in family {
        let f: Vec<f64> = (0..n)
            .map(|i| {
                let a = lp.a_of_s[i];
                phi.derivative(a) * da[i] * jets[i][0] + phi.value(a) * jets[i][1] * dr[i]
            })
            .collect();
        best = best.max(std::f64::consts::TAU * simpson(&f, h));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{make_example_profile, ProfileKind};
    use proptest::prelude::*;

    #[test]
    fn j_tau_squares_to_minus_identity() {
        for &(a, q, t) in &[(0.0, 1.0, 0.5), (4.4, 0.3, 2.0), (-1.0, 2.0, -3.0)] {
            let m = j_tau(a, q, t);
            assert!((m * m + Matrix2::identity()).abs().max() < 1e-10);
        }
    }

    #[test]
    fn smoothstep_is_a_test_function() {
        let s = SmoothStep { center: 1.0, half_width: 0.5 };
        assert_eq!(s.value(0.4), 0.0);
        assert_eq!(s.value(1.6), 1.0);
        assert!((s.value(1.0) - 0.5).abs() < 1e-15);
        let h = 1e-6;
        let fd = (s.value(1.2 + h) - s.value(1.2 - h)) / (2.0 * h);
        assert!((fd - s.derivative(1.2)).abs() < 1e-8);
    }

    #[test]
    fn structure_is_continuous_at_the_seams() {
        let p = make_example_profile(ProfileKind::Example1, 1.0, 0.7).unwrap();
        let cfg = LeafConfig::default();
        let e = 1e-9;
        let a = structure_h(&p, &cfg, 0.1 - e).unwrap();
        let b = structure_h(&p, &cfg, 0.1 + e).unwrap();
        assert!((a - b).abs() < 1e-6);
        let c = structure_h(&p, &cfg, 0.9 - e).unwrap();
        assert!((c - 1.0).abs() < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn j_is_a_complex_structure(r in 1e-3f64..0.94) {
            let p = make_example_profile(ProfileKind::Example1, 1.0, 0.7).unwrap();
            let cfg = LeafConfig::default();
            let j = admissible_j(&p, r, &cfg).unwrap();
            prop_assert!((j * j + Matrix2::identity()).abs().max() < 1e-12);
            let (a, b) = compatibility(&p, r, &cfg).unwrap();
            prop_assert!(a > 0.0 && b > 0.0);
        }

        #[test]
        fn j_diff_is_linear_in_tau_minus_sigma(t in -2.0f64..2.0, s in -2.0f64..2.0, a in -5.0f64..5.0, q in 0.0f64..1.0) {
            let d = j_tau(a, q, t) - j_tau(a, q, s);
            let want = Matrix2::new(-1.0, 0.0, (t + s) * a * q, 1.0) * (a * q * (t - s));
            prop_assert!((d - want).abs().max() < 1e-10 * (1.0 + want.abs().max()));
        }
    }
}

//! Reeb dynamics of a local model: the Reeb field, its exact and numerical
//! flows, the linearization along the binding orbit, return times, sampled
//! contact/confoliation checks and the contact threshold of the
//! Thurston-Winkelnkemper construction.

use std::f64::consts::TAU;
use std::io::{Read, Write};

use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{rk4_step, wrap_angle};
use crate::profiles::{BindingProfile, DesignCurve};

/// Default RK4 step for Reeb flows.
pub const DEFAULT_FLOW_STEP: f64 = 1e-3;

/// A point of the chart `S¹ × D` in coordinates `(θ, r, φ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub theta: f64,
    pub r: f64,
    pub phi: f64,
}

impl ChartPoint {
    /// Build a point with both angles reduced to `[0, 2π)`.
    pub fn new(theta: f64, r: f64, phi: f64) -> Self {
        Self { theta: wrap_angle(theta), r, phi: wrap_angle(phi) }
    }

    /// Cartesian disk coordinates `(θ, x, y)`.
    pub fn cartesian(&self) -> [f64; 3] {
        [self.theta, self.r * self.phi.cos(), self.r * self.phi.sin()]
    }

    /// Inverse of [`ChartPoint::cartesian`].
    pub fn from_cartesian(theta: f64, x: f64, y: f64) -> Self {
        Self::new(theta, x.hypot(y), y.atan2(x))
    }
}

/// Tangent vector in the frame `(∂θ, ∂r, ∂φ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tangent3 {
    pub v_theta: f64,
    pub v_r: f64,
    pub v_phi: f64,
}

/// The Reeb field `α(r) ∂θ + β(r) ∂φ`.
pub fn reeb_field(profile: &BindingProfile, p: ChartPoint) -> Result<Tangent3> {
    let d = profile.derived_quantities(p.r)?;
    Ok(Tangent3 { v_theta: d.alpha, v_r: 0.0, v_phi: d.beta })
}

/// Integration scheme for [`flow`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowMethod {
    /// Substitute into `θ₀ + α t`, `φ₀ + β t`.
    ClosedForm,
    /// Fixed-step classical Runge-Kutta.
    Rk4 { step: f64 },
}

impl FlowMethod {
    /// RK4 with [`DEFAULT_FLOW_STEP`].
    pub fn rk4() -> Self {
        Self::Rk4 { step: DEFAULT_FLOW_STEP }
    }
}

/// Flow a point along the Reeb field for time `t`.
pub fn flow(profile: &BindingProfile, p: ChartPoint, t: f64, method: FlowMethod) -> Result<ChartPoint> {
    let d = profile.derived_quantities(p.r)?;
    match method {
        FlowMethod::ClosedForm => Ok(ChartPoint::new(p.theta + d.alpha * t, p.r, p.phi + d.beta * t)),
        FlowMethod::Rk4 { step } => {
            if !(step > 0.0) {
                return Err(Error::Precondition(format!("rk4 step = {step} must be positive")));
            }
            let field = |y: &[f64; 3]| -> [f64; 3] {
                let d = profile.derived_quantities(y[1]).expect("radius checked");
                [d.alpha, 0.0, d.beta]
            };
            let n = (t.abs() / step).ceil() as usize;
            let mut y = [p.theta, p.r, p.phi];
            if n > 0 {
                let h = t / n as f64;
                for _ in 0..n {
                    y = rk4_step(&field, &y, h);
                    y[0] = wrap_angle(y[0]);
                    y[2] = wrap_angle(y[2]);
                }
            }
            Ok(ChartPoint::new(y[0], y[1], y[2]))
        }
    }
}

/// Flow a batch of points in parallel; each point is independent.
pub fn flow_batch(
    profile: &BindingProfile,
    points: &[ChartPoint],
    t: f64,
    method: FlowMethod,
) -> Result<Vec<ChartPoint>> {
    points.par_iter().map(|&p| flow(profile, p, t, method)).collect()
}

/// Linearized flow along the binding orbit in coordinates `(θ, x, y)`:
/// identity on `θ`, rotation by `β(0) t` on the disk.
pub fn linearized_flow(profile: &BindingProfile, t: f64) -> Matrix3<f64> {
    let b0 = profile.derived_quantities(0.0).expect("r = 0 is always admissible").beta;
    let (s, c) = (b0 * t).sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

/// Classification of the binding orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrbitReport {
    /// `2π γ₁(0)`.
    pub period: f64,
    /// `−κ ∉ ℤ`.
    pub nondegenerate: bool,
    pub elliptic: bool,
    /// `β(0)·period` reduced to `[0, 2π)`.
    pub floquet_angle: f64,
}

/// Period, nondegeneracy and Floquet angle of the binding orbit.
pub fn binding_orbit_report(profile: &BindingProfile) -> OrbitReport {
    let g10 = profile.gamma1_at_0();
    let period = TAU * g10;
    let kappa = profile.kappa();
    let b0 = profile.derived_quantities(0.0).expect("r = 0 is always admissible").beta;
    OrbitReport {
        period,
        nondegenerate: (kappa - kappa.round()).abs() > 1e-12,
        elliptic: true,
        floquet_angle: wrap_angle(b0 * period),
    }
}

/// Time for the `φ`-coordinate to advance by one full turn, `2π/|β(r)|`.
pub fn return_time(profile: &BindingProfile, r: f64) -> Result<f64> {
    if !(r > 0.0 && r <= profile.r_max()) {
        return Err(Error::out_of_range("r", r, 0.0, profile.r_max()));
    }
    let beta = profile.derived_quantities(r)?.beta;
    if beta == 0.0 {
        return Err(Error::Precondition(format!("beta({r}) = 0: the phi-coordinate never returns")));
    }
    Ok(TAU / beta.abs())
}

/// Return time measured by integrating the Reeb field with RK4 until the
/// unwrapped `φ` has advanced by `2π`, then bisecting the last step to
/// `1e-9` in time.
pub fn return_time_by_flow(profile: &BindingProfile, r: f64, step: f64) -> Result<f64> {
    let beta = profile.derived_quantities(r)?.beta;
    if beta == 0.0 {
        return Err(Error::Precondition(format!("beta({r}) = 0: the phi-coordinate never returns")));
    }
    let field = |_: &[f64; 2]| -> [f64; 2] {
        let d = profile.derived_quantities(r).expect("radius checked");
        [d.alpha, d.beta]
    };
    let advance = |y: &[f64; 2]| (y[1]).abs() - TAU;
    let mut y = [0.0, 0.0];
    let mut t = 0.0;
    let max_steps = (1e8f64).min(10.0 * TAU / (beta.abs() * step)) as usize + 10;
    for _ in 0..max_steps {
        let next = rk4_step(&field, &y, step);
        if advance(&next) >= 0.0 {
            let (mut lo, mut hi) = (0.0, step);
            while hi - lo > 1e-9 {
                let mid = 0.5 * (lo + hi);
                if advance(&rk4_step(&field, &y, mid)) >= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(t + 0.5 * (lo + hi));
        }
        y = next;
        t += step;
    }
    Err(Error::Numeric("phi never completed a turn".into()))
}

/// One sample of a 1-form on the chart in coordinates `(θ, x, y)`.
///
/// `lambda = (λ_θ, λ_x, λ_y)`; `dlambda = (c_θx, c_θy, c_xy)` are the
/// coefficients of `dλ` on `dθ∧dx`, `dθ∧dy`, `dx∧dy`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormSample {
    pub point: [f64; 3],
    pub lambda: [f64; 3],
    pub dlambda: [f64; 3],
}

impl FormSample {
    /// Coefficient of `λ∧dλ` on `dθ∧dx∧dy`.
    pub fn wedge(&self) -> f64 {
        let [lt, lx, ly] = self.lambda;
        let [ctx, cty, cxy] = self.dlambda;
        lt * cxy - lx * cty + ly * ctx
    }

    /// Sample `λ = P(r²) dθ + Q(r²) dφ` from `[P, P_u, Q, Q_u]`.
    pub fn from_u_jet(theta: f64, x: f64, y: f64, jet: [f64; 4]) -> Self {
        let [p, pu, q, qu] = jet;
        let u = x * x + y * y;
        let qr = if u > 0.0 { q / u } else { qu };
        Self { point: [theta, x, y], lambda: [p, -y * qr, x * qr], dlambda: [-2.0 * pu * x, -2.0 * pu * y, 2.0 * qu] }
    }
}

/// Type of a sampled 1-form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FormClass {
    Contact,
    Confoliation,
    Neither,
}

/// Result of [`contact_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContactReport {
    pub class: FormClass,
    /// Smallest `λ∧dλ` coefficient.
    pub min: f64,
    pub argmin: usize,
    pub argmin_point: [f64; 3],
    /// Largest `|λ∧dλ|`, the scale for the zero tolerance.
    pub max_abs: f64,
    /// Samples counted as zero.
    pub zero_count: usize,
}

/// Relative tolerance under which `λ∧dλ` counts as zero.
pub const ZERO_REL_TOL: f64 = 1e-10;

/// Classify sampled forms as contact, confoliation or neither.
pub fn contact_check(samples: &[FormSample]) -> Result<ContactReport> {
    if samples.is_empty() {
        return Err(Error::Precondition("empty sample grid".into()));
    }
    let w: Vec<f64> = samples.iter().map(FormSample::wedge).collect();
    if let Some(i) = w.iter().position(|v| !v.is_finite()) {
        return Err(Error::Precondition(format!("sample {i} is not finite")));
    }
    let max_abs = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = ZERO_REL_TOL * max_abs;
    let (argmin, min) =
        w.iter().copied().enumerate().fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let zero_count = w.iter().filter(|v| v.abs() <= tol).count();
    let class = if min > tol {
        FormClass::Contact
    } else if min >= -tol {
        FormClass::Confoliation
    } else {
        FormClass::Neither
    };
    Ok(ContactReport { class, min, argmin, argmin_point: samples[argmin].point, max_abs, zero_count })
}

/// Points of a polar grid on `S¹ × D_{r_max}` in coordinates `(θ, x, y)`:
/// `n_theta` angles `θ`, `n_r` radii in `(0, r_max]` and `n_phi` angles `φ`.
pub fn chart_grid(n_theta: usize, n_r: usize, n_phi: usize, r_max: f64) -> Vec<[f64; 3]> {
    let mut pts = Vec::with_capacity(n_theta * n_r * n_phi);
    for i in 0..n_theta {
        let th = TAU * i as f64 / n_theta as f64;
        for j in 1..=n_r {
            let r = r_max * j as f64 / n_r as f64;
            for k in 0..n_phi {
                let ph = TAU * k as f64 / n_phi as f64;
                pts.push([th, r * ph.cos(), r * ph.sin()]);
            }
        }
    }
    pts
}

/// Sample a profile's contact form on the given points.
pub fn sample_profile_form(profile: &BindingProfile, points: &[[f64; 3]]) -> Result<Vec<FormSample>> {
    points
        .iter()
        .map(|&[th, x, y]| {
            // Points on the outer ring may overshoot r_max by round-off.
            let rho = x.hypot(y);
            let r_max = profile.r_max();
            let rho = if rho > r_max && rho - r_max <= 4.0 * f64::EPSILON * r_max { r_max } else { rho };
            let j = profile.u_jet(rho)?;
            Ok(FormSample::from_u_jet(th, x, y, [j.p[0], j.p[1], j.q[0], j.q[1]]))
        })
        .collect()
}

/// Samples of the glued `δ = 0` form: the interpolation curve near the
/// binding and `λ₀ = dφ` on the flat region `r ≥ 1 − ε₀`.
pub fn glued_confoliation_samples(kappa: f64, eps0: f64, points: &[[f64; 3]]) -> Result<Vec<FormSample>> {
    let curve = DesignCurve::glued(eps0, kappa)?;
    Ok(points.iter().map(|&[th, x, y]| FormSample::from_u_jet(th, x, y, curve.u_jet(x * x + y * y))).collect())
}

/// Page data for the contact threshold: per node the scalars
/// `a = (α̃∧dα̃)(u,v,w)` and `b = dτ(π_*w)·dα̃(u,v)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageSample {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PageRow {
    a: f64,
    b: f64,
}

impl PageSample {
    /// Read CSV with header `a,b`.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["a", "b"] {
            return Err(Error::Schema(format!("page CSV header must be a,b, found {headers:?}")));
        }
        let mut out = Self { a: Vec::new(), b: Vec::new() };
        for row in rdr.deserialize() {
            let row: PageRow = row?;
            out.a.push(row.a);
            out.b.push(row.b);
        }
        Ok(out)
    }

    /// Write CSV with header `a,b`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (&a, &b) in self.a.iter().zip(&self.b) {
            w.serialize(PageRow { a, b })?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Largest `δ` for which `λ₁ = −δα̃ + π*dτ` is contact on the samples:
/// `min b/|a|`, infinite when every `a` vanishes.
pub fn tw_contact_threshold(page: &PageSample) -> Result<f64> {
    if page.a.len() != page.b.len() {
        return Err(Error::Precondition("a and b have different lengths".into()));
    }
    if let Some(i) = page.b.iter().position(|&b| !(b > 0.0)) {
        return Err(Error::Precondition(format!(
            "b = {} <= 0 at node {i}: d(alpha~) is not a fiber area form",
            page.b[i]
        )));
    }
    Ok(page.a.iter().zip(&page.b).filter(|(a, _)| **a != 0.0).map(|(a, b)| b / a.abs()).fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{make_example_profile, ProfileKind};
    use proptest::prelude::*;

    fn ex2() -> BindingProfile {
        make_example_profile(ProfileKind::Example2, 1.0, 0.7).unwrap()
    }

    #[test]
    fn example2_reeb_field() {
        let x = reeb_field(&ex2(), ChartPoint::new(0.0, 0.3, 0.0)).unwrap();
        assert!((x.v_theta - 1.0).abs() < 1e-15 && (x.v_phi - 0.7).abs() < 1e-15);
        assert_eq!(x.v_r, 0.0);
    }

    #[test]
    fn closed_form_full_turn() {
        let q = flow(&ex2(), ChartPoint::new(0.0, 0.3, 0.0), TAU, FlowMethod::ClosedForm).unwrap();
        assert!(q.theta.min(TAU - q.theta) < 1e-12);
        assert!((q.phi - 1.4 * std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(q.r, 0.3);
    }

    #[test]
    fn threshold_examples() {
        let p = PageSample { a: vec![2.0; 5], b: vec![1.0; 5] };
        assert_eq!(tw_contact_threshold(&p).unwrap(), 0.5);
        let p = PageSample { a: vec![0.0; 3], b: vec![1.0; 3] };
        assert_eq!(tw_contact_threshold(&p).unwrap(), f64::INFINITY);
        let p = PageSample { a: vec![1.0, 1.0], b: vec![1.0, -1.0] };
        assert!(tw_contact_threshold(&p).is_err());
    }

    #[test]
    fn page_csv_round_trip() {
        let p = PageSample { a: vec![0.25, -1.5], b: vec![1.0, 3.0] };
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"a,b\n"));
        assert_eq!(PageSample::read_csv(&buf[..]).unwrap(), p);
    }

    #[test]
    fn wedge_of_profile_form_is_mu_over_r() {
        let p = make_example_profile(ProfileKind::Example1, 1.0, 0.7).unwrap();
        let pts = chart_grid(2, 7, 5, 0.9);
        for s in sample_profile_form(&p, &pts).unwrap() {
            let r = s.point[1].hypot(s.point[2]);
            let want = p.mu(r).unwrap() / r;
            assert!((s.wedge() - want).abs() < 1e-12 * want.max(1.0));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn threshold_is_homogeneous(c in 0.1f64..10.0, a in prop::collection::vec(0.1f64..5.0, 1..20)) {
            let b: Vec<f64> = a.iter().map(|x| 1.0 + x).collect();
            let p = PageSample { a: a.clone(), b: b.clone() };
            let q = PageSample { a: a.iter().map(|x| c * x).collect(), b };
            let d0 = tw_contact_threshold(&p).unwrap();
            let d1 = tw_contact_threshold(&q).unwrap();
            prop_assert!((d1 - d0 / c).abs() <= 1e-12 * d0 / c);
        }

        #[test]
        fn flow_preserves_radius_and_contraction(th in 0.0f64..TAU, r in 0.0f64..0.9, ph in 0.0f64..TAU, t in -20.0f64..20.0) {
            let p = make_example_profile(ProfileKind::Example1, 1.0, 0.7).unwrap();
            let q = flow(&p, ChartPoint::new(th, r, ph), t, FlowMethod::ClosedForm).unwrap();
            prop_assert_eq!(q.r, r);
            let x = reeb_field(&p, q).unwrap();
            let j = p.jet(r).unwrap();
            prop_assert!((j.g1[0] * x.v_theta + j.g2[0] * x.v_phi - 1.0).abs() < 1e-10);
        }
    }
}

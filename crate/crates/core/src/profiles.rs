//! Binding profiles `(γ₁, γ₂)` for the local model `λ = γ₁(r) dθ + γ₂(r) dφ`
//! on `S¹ × D`, the quantities derived from them, the six-condition
//! validator and the construction of the interpolation curve that joins the
//! binding jet to the flat page region.
//!
//! Internally every profile is evaluated as a pair of functions of `u = r²`,
//! `γ₁ = P(u)` and `γ₂ = Q(u)`. This keeps evenness in `r` structural and
//! lets `μ`, `α`, `β` and `A` be written through the Wronskians
//! `W₁ = PQ' − P'Q` and `W₂ = P'Q'' − P''Q'`, which stay well conditioned at
//! the axis:
//!
//! ```text
//! μ = 2r W₁,  α = Q'/W₁,  β = −P'/W₁,  A = 2r W₂ / W₁²,  κ = P'(0)/Q'(0)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{linspace, logspace};

/// Tolerance for strict inequalities in the validator.
pub const STRICT_TOL: f64 = 1e-12;

/// Profile family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    /// `γ₁ = T(1−r²)`, `γ₂ = r²(1−r²)/k`.
    Example1,
    /// `γ₁ = T(1−r²)`, `γ₂ = r²/k`.
    Example2,
    /// Piecewise quintic Hermite through knots.
    Spline,
}

impl ProfileKind {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "example1" => Ok(Self::Example1),
            "example2" => Ok(Self::Example2),
            "spline" => Ok(Self::Spline),
            other => Err(Error::Schema(format!("unknown profile kind \"{other}\""))),
        }
    }

    /// Lowercase name as used in profile files.
    pub fn name(self) -> &'static str {
        match self {
            Self::Example1 => "example1",
            Self::Example2 => "example2",
            Self::Spline => "spline",
        }
    }
}

/// Scalar parameters carried by every profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileParams {
    /// Period scale `T` (for splines: `γ₁(0)`).
    #[serde(rename = "T")]
    pub t: f64,
    /// Rotation parameter `k` (for splines: `−κ/γ₁(0)`).
    pub k: f64,
    /// Interpolation slope `δ ≥ 0` (zero for the examples).
    pub delta: f64,
}

/// One spline knot: value and first derivative of both profile functions.
///
/// At the knot `r = 0` the derivative slots hold `d/d(r²)` values, since the
/// `r`-derivatives vanish there structurally.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Knot {
    pub r: f64,
    pub g1: f64,
    pub dg1: f64,
    pub g2: f64,
    pub dg2: f64,
}

impl Knot {
    fn to_array(self) -> [f64; 5] {
        [self.r, self.g1, self.dg1, self.g2, self.dg2]
    }
}

/// Derivatives of `γ₁` and `γ₂` with respect to `r`, orders 0 to 3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub g1: [f64; 4],
    pub g2: [f64; 4],
}

/// Derivatives of `P` and `Q` with respect to `u = r²`, orders 0 to 3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UJet {
    pub p: [f64; 4],
    pub q: [f64; 4],
}

impl UJet {
    /// `W₁ = PQ' − P'Q`.
    pub fn w1(&self) -> f64 {
        self.p[0] * self.q[1] - self.p[1] * self.q[0]
    }

    /// `W₂ = P'Q'' − P''Q'`.
    pub fn w2(&self) -> f64 {
        self.p[1] * self.q[2] - self.p[2] * self.q[1]
    }

    /// Convert to `r`-derivatives at radius `r`.
    pub fn to_r(&self, r: f64) -> Jet {
        let conv = |f: &[f64; 4]| {
            let u = r * r;
            [f[0], 2.0 * r * f[1], 2.0 * f[1] + 4.0 * u * f[2], 12.0 * r * f[2] + 8.0 * r * u * f[3]]
        };
        Jet { g1: conv(&self.p), g2: conv(&self.q) }
    }
}

/// Convert an `r`-jet at `r > 0` into a `u`-jet.
fn r_to_u(f: &[f64; 4], r: f64) -> [f64; 4] {
    let u = r * r;
    let d1 = f[1] / (2.0 * r);
    let d2 = (f[2] - 2.0 * d1) / (4.0 * u);
    let d3 = (f[3] - 12.0 * r * d2) / (8.0 * r * u);
    [f[0], d1, d2, d3]
}

/// Quintic Hermite polynomial on `[x0, x0 + h]` in local monomial form.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Quintic {
    x0: f64,
    h: f64,
    c: [f64; 6],
}

impl Quintic {
    /// Interpolate value, first and second derivative at both ends.
    fn new(x0: f64, x1: f64, a: [f64; 3], b: [f64; 3]) -> Self {
        let h = x1 - x0;
        let c0 = a[0];
        let c1 = h * a[1];
        let c2 = 0.5 * h * h * a[2];
        let f1 = b[0] - (c0 + c1 + c2);
        let d1 = h * b[1] - (c1 + 2.0 * c2);
        let s1 = h * h * b[2] - 2.0 * c2;
        let c3 = 10.0 * f1 - 4.0 * d1 + 0.5 * s1;
        let c4 = -15.0 * f1 + 7.0 * d1 - s1;
        let c5 = 6.0 * f1 - 3.0 * d1 + 0.5 * s1;
        Self { x0, h, c: [c0, c1, c2, c3, c4, c5] }
    }

    /// Value and derivatives up to order 3 with respect to `x`.
    fn eval(&self, x: f64) -> [f64; 4] {
        let t = (x - self.x0) / self.h;
        let c = &self.c;
        let v = c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5]))));
        let d1 = c[1] + t * (2.0 * c[2] + t * (3.0 * c[3] + t * (4.0 * c[4] + t * 5.0 * c[5])));
        let d2 = 2.0 * c[2] + t * (6.0 * c[3] + t * (12.0 * c[4] + t * 20.0 * c[5]));
        let d3 = 6.0 * c[3] + t * (24.0 * c[4] + t * 60.0 * c[5]);
        let h = self.h;
        [v, d1 / h, d2 / (h * h), d3 / (h * h * h)]
    }
}

/// One spline segment for both components. Segment 0 lives in `u`, all
/// others in `r`.
#[derive(Debug, Clone, PartialEq)]
struct Segment {
    r0: f64,
    r1: f64,
    in_u: bool,
    g1: Quintic,
    g2: Quintic,
}

fn harmonic_slope(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else {
        2.0 * a * b / (a + b)
    }
}

/// Second derivatives at the knots for one component: entry 0 is a
/// `u`-derivative, the rest are `r`-derivatives.
fn knot_second_derivatives(r: &[f64], d: &[f64]) -> Vec<f64> {
    let n = r.len();
    let mut s = vec![0.0; n];
    // u-derivatives at the first three knots.
    let du: Vec<f64> = (0..n.min(3)).map(|i| if i == 0 { d[0] } else { d[i] / (2.0 * r[i]) }).collect();
    let u: Vec<f64> = r.iter().take(3).map(|x| x * x).collect();
    let sec0 = (du[1] - du[0]) / (u[1] - u[0]);
    s[0] = sec0;
    let s_u1 = if n > 2 { harmonic_slope(sec0, (du[2] - du[1]) / (u[2] - u[1])) } else { sec0 };
    s[1] = 2.0 * du[1] + 4.0 * u[1] * s_u1;
    for i in 2..n {
        let left = (d[i] - d[i - 1]) / (r[i] - r[i - 1]);
        s[i] = if i + 1 < n { harmonic_slope(left, (d[i + 1] - d[i]) / (r[i + 1] - r[i])) } else { left };
    }
    s
}

fn build_segments(knots: &[Knot]) -> Vec<Segment> {
    let r: Vec<f64> = knots.iter().map(|k| k.r).collect();
    let v1: Vec<f64> = knots.iter().map(|k| k.g1).collect();
    let d1: Vec<f64> = knots.iter().map(|k| k.dg1).collect();
    let v2: Vec<f64> = knots.iter().map(|k| k.g2).collect();
    let d2: Vec<f64> = knots.iter().map(|k| k.dg2).collect();
    let s1 = knot_second_derivatives(&r, &d1);
    let s2 = knot_second_derivatives(&r, &d2);
    let mut segs = Vec::with_capacity(knots.len() - 1);
    for i in 0..knots.len() - 1 {
        if i == 0 {
            let u1 = r[1] * r[1];
            let s_u = |s: f64, d: f64| (s - 2.0 * d / (2.0 * r[1])) / (4.0 * u1);
            let g1 = Quintic::new(0.0, u1, [v1[0], d1[0], s1[0]], [v1[1], d1[1] / (2.0 * r[1]), s_u(s1[1], d1[1])]);
            let g2 = Quintic::new(0.0, u1, [v2[0], d2[0], s2[0]], [v2[1], d2[1] / (2.0 * r[1]), s_u(s2[1], d2[1])]);
            segs.push(Segment { r0: 0.0, r1: r[1], in_u: true, g1, g2 });
        } else {
            let g1 = Quintic::new(r[i], r[i + 1], [v1[i], d1[i], s1[i]], [v1[i + 1], d1[i + 1], s1[i + 1]]);
            let g2 = Quintic::new(r[i], r[i + 1], [v2[i], d2[i], s2[i]], [v2[i + 1], d2[i + 1], s2[i + 1]]);
            segs.push(Segment { r0: r[i], r1: r[i + 1], in_u: false, g1, g2 });
        }
    }
    segs
}

/// A radial profile pair defining a local-model contact form.
#[derive(Debug, Clone, PartialEq)]
pub struct BindingProfile {
    kind: ProfileKind,
    params: ProfileParams,
    r_max: f64,
    knots: Vec<Knot>,
    segments: Vec<Segment>,
}

/// On-disk profile document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileDoc {
    pub kind: String,
    #[serde(rename = "T")]
    pub t: f64,
    pub k: f64,
    #[serde(default)]
    pub delta: f64,
    pub r_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knots: Option<Vec<[f64; 5]>>,
}

fn check_example_params(t: f64, k: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::ConstraintViolation {
            condition: 3,
            detail: format!("T = {t} must be positive so that gamma_1(0) > 0"),
        });
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::ConstraintViolation {
            condition: 4,
            detail: format!("k = {k} must be positive so that gamma_2''(0) > 0"),
        });
    }
    let kt = k * t;
    if kt < 0.5 {
        return Err(Error::ConstraintViolation {
            condition: 5,
            detail: format!("kT = {kt} < 1/2, so kappa = -kT > -1/2"),
        });
    }
    if (kt - kt.round()).abs() <= STRICT_TOL {
        return Err(Error::ConstraintViolation {
            condition: 5,
            detail: format!("kT = {kt} is an integer, so kappa is an integer"),
        });
    }
    Ok(())
}

/// Build one of the two closed-form example profiles.
///
/// `r_max` is `0.95` for example 1 (its `μ` vanishes at `r = 1`) and `1` for
/// example 2.
pub fn make_example_profile(kind: ProfileKind, t: f64, k: f64) -> Result<BindingProfile> {
    let r_max = match kind {
        ProfileKind::Example1 => 0.95,
        ProfileKind::Example2 => 1.0,
        ProfileKind::Spline => {
            return Err(Error::Precondition("make_example_profile takes example1 or example2".into()))
        }
    };
    check_example_params(t, k)?;
    Ok(BindingProfile {
        kind,
        params: ProfileParams { t, k, delta: 0.0 },
        r_max,
        knots: Vec::new(),
        segments: Vec::new(),
    })
}

impl BindingProfile {
    /// Build a spline profile from knots.
    ///
    /// The first knot must sit at `r = 0`; radii must increase strictly and
    /// stay within `(0, 1]`.
    pub fn spline(params: ProfileParams, knots: Vec<Knot>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::Schema("spline needs at least two knots".into()));
        }
        if knots[0].r != 0.0 {
            return Err(Error::Schema("knot 0 must sit at r = 0".into()));
        }
        for (i, k) in knots.iter().enumerate() {
            let a = k.to_array();
            if a.iter().any(|x| !x.is_finite()) {
                return Err(Error::Schema(format!("knot {i} has a non-finite entry")));
            }
            if i > 0 && k.r <= knots[i - 1].r {
                return Err(Error::Schema(format!("knot {i} is not sorted: r = {} after r = {}", k.r, knots[i - 1].r)));
            }
        }
        let r_max = knots[knots.len() - 1].r;
        if r_max > 1.0 {
            return Err(Error::Schema(format!("last knot r = {r_max} exceeds 1")));
        }
        let segments = build_segments(&knots);
        Ok(Self { kind: ProfileKind::Spline, params, r_max, knots, segments })
    }

    /// Build from a parsed profile document.
    pub fn from_doc(doc: &ProfileDoc) -> Result<Self> {
        let kind = ProfileKind::parse(&doc.kind)?;
        if !(doc.r_max > 0.0 && doc.r_max <= 1.0) {
            return Err(Error::Schema(format!("r_max = {} not in (0, 1]", doc.r_max)));
        }
        match kind {
            ProfileKind::Spline => {
                let rows = doc.knots.as_ref().ok_or_else(|| Error::Schema("spline profile needs \"knots\"".into()))?;
                let knots = rows.iter().map(|a| Knot { r: a[0], g1: a[1], dg1: a[2], g2: a[3], dg2: a[4] }).collect();
                let p = Self::spline(ProfileParams { t: doc.t, k: doc.k, delta: doc.delta }, knots)?;
                if p.r_max != doc.r_max {
                    return Err(Error::Schema(format!(
                        "r_max = {} differs from the last knot radius {}",
                        doc.r_max, p.r_max
                    )));
                }
                Ok(p)
            }
            _ => {
                let mut p = make_example_profile(kind, doc.t, doc.k)?;
                p.params.delta = doc.delta;
                p.r_max = doc.r_max;
                Ok(p)
            }
        }
    }

    /// Parse a profile from JSON text.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ProfileDoc = serde_json::from_str(text)?;
        Self::from_doc(&doc)
    }

    /// Document form for serialization.
    pub fn to_doc(&self) -> ProfileDoc {
        ProfileDoc {
            kind: self.kind.name().to_string(),
            t: self.params.t,
            k: self.params.k,
            delta: self.params.delta,
            r_max: self.r_max,
            knots: if self.kind == ProfileKind::Spline {
                Some(self.knots.iter().map(|k| k.to_array()).collect())
            } else {
                None
            },
        }
    }

    /// Family tag.
    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    /// Scalar parameters.
    pub fn params(&self) -> ProfileParams {
        self.params
    }

    /// Largest admissible radius.
    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Spline knots (empty for the examples).
    pub fn knots(&self) -> &[Knot] {
        &self.knots
    }

    fn check_r(&self, r: f64) -> Result<()> {
        if !(0.0..=self.r_max).contains(&r) {
            return Err(Error::out_of_range("r", r, 0.0, self.r_max));
        }
        Ok(())
    }

    fn segment(&self, r: f64) -> &Segment {
        let i = self.segments.partition_point(|s| s.r1 < r);
        &self.segments[i.min(self.segments.len() - 1)]
    }

    /// Derivatives in `u = r²` at radius `r`.
    pub fn u_jet(&self, r: f64) -> Result<UJet> {
        self.check_r(r)?;
        Ok(self.u_jet_unchecked(r))
    }

    fn u_jet_unchecked(&self, r: f64) -> UJet {
        let u = r * r;
        let ProfileParams { t, k, .. } = self.params;
        match self.kind {
            ProfileKind::Example1 => {
                UJet { p: [t * (1.0 - u), -t, 0.0, 0.0], q: [(u - u * u) / k, (1.0 - 2.0 * u) / k, -2.0 / k, 0.0] }
            }
            ProfileKind::Example2 => UJet { p: [t * (1.0 - u), -t, 0.0, 0.0], q: [u / k, 1.0 / k, 0.0, 0.0] },
            ProfileKind::Spline => {
                let seg = self.segment(r);
                if seg.in_u {
                    UJet { p: seg.g1.eval(u), q: seg.g2.eval(u) }
                } else {
                    UJet { p: r_to_u(&seg.g1.eval(r), r), q: r_to_u(&seg.g2.eval(r), r) }
                }
            }
        }
    }

    /// Derivatives in `r` of `γ₁` and `γ₂` up to order 3.
    pub fn jet(&self, r: f64) -> Result<Jet> {
        self.check_r(r)?;
        if self.kind == ProfileKind::Spline {
            let seg = self.segment(r);
            if !seg.in_u {
                return Ok(Jet { g1: seg.g1.eval(r), g2: seg.g2.eval(r) });
            }
        }
        Ok(self.u_jet_unchecked(r).to_r(r))
    }

    /// `γ₁(0)`.
    pub fn gamma1_at_0(&self) -> f64 {
        self.u_jet_unchecked(0.0).p[0]
    }

    /// `κ = γ₁''(0)/γ₂''(0)`.
    pub fn kappa(&self) -> f64 {
        let j = self.u_jet_unchecked(0.0);
        j.p[1] / j.q[1]
    }

    /// `μ(r) = γ₁γ₂' − γ₁'γ₂`.
    pub fn mu(&self, r: f64) -> Result<f64> {
        Ok(2.0 * r * self.u_jet(r)?.w1())
    }

    /// Leaf-equation coefficient `Λ(r) = γ₁'γ₁/μ`, so that `r' = Λ(r) r`
    /// on the small-radius regime. Tends to `κ` at the axis.
    pub fn leaf_coefficient(&self, r: f64) -> Result<f64> {
        let j = self.u_jet(r)?;
        Ok(j.p[0] * j.p[1] / j.w1())
    }

    /// `μ, α, β, A, κ` at radius `r`; exact limits at `r = 0`.
    pub fn derived_quantities(&self, r: f64) -> Result<DerivedQuantities> {
        derived_quantities(self, r)
    }
}

/// Quantities derived from a profile at one radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedQuantities {
    pub r: f64,
    pub mu: f64,
    /// `θ`-speed of the Reeb field.
    pub alpha: f64,
    /// `φ`-speed of the Reeb field.
    pub beta: f64,
    pub big_a: f64,
    pub kappa: f64,
}

/// Evaluate `μ`, `α`, `β`, `A` and `κ` at radius `r`.
pub fn derived_quantities(profile: &BindingProfile, r: f64) -> Result<DerivedQuantities> {
    let j = profile.u_jet(r)?;
    let w1 = j.w1();
    Ok(DerivedQuantities {
        r,
        mu: 2.0 * r * w1,
        alpha: j.q[1] / w1,
        beta: -j.p[1] / w1,
        big_a: 2.0 * r * j.w2() / (w1 * w1),
        kappa: profile.kappa(),
    })
}

/// Outcome of one local-model condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCheck {
    /// Condition number, 1 to 6.
    pub condition: u8,
    pub description: String,
    pub passed: bool,
    /// Signed worst-case margin; negative means violated.
    pub margin: f64,
}

/// Per-condition validation of a profile on a sample grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub conditions: Vec<ConditionCheck>,
    pub grid: Vec<f64>,
    pub passed: bool,
}

impl ValidationReport {
    /// Entry for condition `c` (1-based).
    pub fn condition(&self, c: u8) -> &ConditionCheck {
        &self.conditions[(c - 1) as usize]
    }
}

/// Validation grid: three quarters log-spaced on `[1e-6, 1e-1]`, the rest
/// uniform on `(0.1, r_max]`.
pub fn validation_grid(r_max: f64, n_samples: usize) -> Vec<f64> {
    let n_log = 3 * n_samples / 4;
    let hi = 0.1f64.min(r_max);
    let mut g = logspace(1e-6, hi, n_log);
    let n_uni = n_samples - n_log;
    if r_max > hi {
        let u = linspace(hi, r_max, n_uni + 1);
        g.extend_from_slice(&u[1..]);
    } else {
        g.extend(logspace(1e-6, hi, n_uni + 2)[1..=n_uni].iter().copied());
        g.sort_by(f64::total_cmp);
    }
    g
}

/// Check the six local-model conditions on a grid clustered near the axis.
pub fn validate_local_model(profile: &BindingProfile, n_samples: usize) -> Result<ValidationReport> {
    if n_samples < 16 {
        return Err(Error::Precondition(format!("n_samples = {n_samples} < 16")));
    }
    let grid = validation_grid(profile.r_max(), n_samples);
    let j0 = profile.u_jet_unchecked(0.0);
    let jet0 = j0.to_r(0.0);
    let samples: Vec<(f64, UJet)> = grid.iter().map(|&r| (r, profile.u_jet_unchecked(r))).collect();

    let mut conds = Vec::with_capacity(6);

    // (1) structural zeros at the axis.
    let defect = jet0.g1[1].abs().max(jet0.g2[0].abs()).max(jet0.g2[1].abs());
    conds.push(ConditionCheck {
        condition: 1,
        description: "gamma_1'(0) = gamma_2(0) = gamma_2'(0) = 0, disk smoothness".into(),
        passed: defect <= STRICT_TOL,
        margin: -defect,
    });

    // (2) mu > 0.
    let m2 = samples.iter().map(|(r, j)| 2.0 * r * j.w1()).fold(f64::INFINITY, f64::min);
    conds.push(ConditionCheck {
        condition: 2,
        description: "mu(r) > 0 for r > 0".into(),
        passed: m2 > STRICT_TOL,
        margin: m2,
    });

    // (3) gamma_1(0) > 0 and gamma_1' < 0.
    let m3 = samples.iter().map(|(r, j)| -2.0 * r * j.p[1]).fold(j0.p[0], f64::min);
    conds.push(ConditionCheck {
        condition: 3,
        description: "gamma_1(0) > 0 and gamma_1'(r) < 0 for r > 0".into(),
        passed: m3 > STRICT_TOL,
        margin: m3,
    });

    // (4) lim mu/r = gamma_1(0) gamma_2''(0) > 0.
    let m4 = j0.p[0] * jet0.g2[2];
    conds.push(ConditionCheck {
        condition: 4,
        description: "lim mu(r)/r = gamma_1(0) gamma_2''(0) > 0".into(),
        passed: m4 > STRICT_TOL,
        margin: m4,
    });

    // (5) kappa <= -1/2 and not an integer; the boundary -1/2 is accepted.
    let kappa = profile.kappa();
    let dist = (kappa - kappa.round()).abs();
    let m5 = (-0.5 - kappa).min(dist);
    conds.push(ConditionCheck {
        condition: 5,
        description: "kappa <= -1/2 and kappa not an integer".into(),
        passed: kappa <= -0.5 + STRICT_TOL && dist > STRICT_TOL,
        margin: m5,
    });

    // (6) |A(r)| <= 2 C r on (0, 0.1], C from the three smallest samples.
    let small: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(r, _)| *r <= 0.1)
        .map(|(r, j)| (*r, (2.0 * r * j.w2() / (j.w1() * j.w1())).abs()))
        .collect();
    let c = small.iter().take(3).map(|(r, a)| a / r).fold(0.0f64, f64::max);
    let m6 = small.iter().map(|(r, a)| 2.0 * c * r - a).fold(f64::INFINITY, f64::min);
    conds.push(ConditionCheck {
        condition: 6,
        description: "A(r) = O(r) near 0: |A(r)| <= 2 C r with C from the smallest samples".into(),
        passed: m6.is_finite() && m6 >= -STRICT_TOL,
        margin: m6,
    });

    let passed = conds.iter().all(|c| c.passed);
    Ok(ValidationReport { conditions: conds, grid, passed })
}

fn binom4(j: usize) -> f64 {
    [1.0, 4.0, 6.0, 4.0, 1.0][j]
}

fn binom5(j: usize) -> f64 {
    [1.0, 5.0, 10.0, 10.0, 5.0, 1.0][j]
}

/// Quartic Bernstein polynomial on `[0, 1]`.
fn bern4(b: &[f64; 5], x: f64) -> f64 {
    (0..5).map(|j| b[j] * binom4(j) * x.powi(j as i32) * (1.0 - x).powi(4 - j as i32)).sum()
}

/// `∫₀ˣ` of a quartic Bernstein polynomial.
fn bern4_integral(b: &[f64; 5], x: f64) -> f64 {
    let mut s = 0.0;
    let mut acc = 0.0;
    for j in 0..6 {
        s += acc * binom5(j) * x.powi(j as i32) * (1.0 - x).powi(5 - j as i32);
        acc += b.get(j).copied().unwrap_or(0.0);
    }
    s / 5.0
}

/// Analytic interpolation curve `γ = γ₁ + iγ₂` from the binding jet to the
/// flat tail `γ₁ = −δr`, `γ₂ = 1` on `[1−ε₀, 1]`.
///
/// In polar form `γ = ρ e^{iα}` the angle has a positive derivative
/// (`μ = ρ² α'`) given by a quartic Bernstein polynomial in `u`, and
/// `ln ρ = ln γ₁(0) + κ α + c(u)` with a correction `c` that is nonzero only
/// where `α > π/2` and has a nonnegative derivative there. Together these
/// force `μ > 0` and `γ₁' < 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignCurve {
    delta: f64,
    g10: f64,
    kappa: f64,
    big_r: f64,
    big_u: f64,
    b: [f64; 5],
    ua: f64,
    c: [f64; 5],
}

/// `α_u(0)` of the design curve.
const DESIGN_ALPHA_U0: f64 = 0.5;

impl DesignCurve {
    /// Build the curve for `δ > 0`.
    pub fn new(delta: f64, eps0: f64, gamma1_at_0: f64, kappa: f64) -> Result<Self> {
        check_design_inputs(delta, eps0, gamma1_at_0, kappa)?;
        if delta <= 0.0 {
            return Err(Error::Precondition(format!("delta = {delta} must be positive")));
        }
        Self::build(delta, eps0, gamma1_at_0, kappa)
    }

    /// The glued `δ = 0` curve. `γ₁(0)` is forced to `e^{−κπ/2}` so that the
    /// pure spiral `ln ρ = ln γ₁(0) + κα` lands on `γ = i`.
    pub fn glued(eps0: f64, kappa: f64) -> Result<Self> {
        let g10 = (-kappa * std::f64::consts::FRAC_PI_2).exp();
        check_design_inputs(0.0, eps0, g10, kappa)?;
        Self::build(0.0, eps0, g10, kappa)
    }

    fn build(delta: f64, eps0: f64, g10: f64, kappa: f64) -> Result<Self> {
        let infeasible = |what: String| Err(Error::Numeric(format!("interpolation curve infeasible: {what}")));
        let big_r = 1.0 - eps0;
        let big_u = big_r * big_r;
        let q = 1.0 + delta * delta * big_u;
        if -kappa * delta * big_r >= 1.0 {
            return infeasible(format!("|kappa| delta R = {} >= 1", -kappa * delta * big_r));
        }
        // Angle targets at R.
        let alpha_r = f64::atan2(1.0, -delta * big_r);
        let a1 = delta / q;
        let a2 = -2.0 * delta.powi(3) * big_r / (q * q);
        let e1 = a1 / (2.0 * big_r);
        let e2 = (a2 - 2.0 * e1) / (4.0 * big_u);
        let b0 = DESIGN_ALPHA_U0;
        let b4 = e1;
        let b3 = e1 - e2 * big_u / 4.0;
        let b12 = 0.5 * (5.0 * alpha_r / big_u - b0 - b3 - b4);
        if b3 < 0.0 || b12 <= 0.0 {
            return infeasible(format!("angle coefficients b3 = {b3}, b1 = b2 = {b12}"));
        }
        let b = [b0, b12, b12, b3, b4];

        // Where alpha crosses pi/2.
        let half_pi = std::f64::consts::FRAC_PI_2;
        let alpha_at = |u: f64| big_u * bern4_integral(&b, u / big_u);
        let (mut lo, mut hi) = (0.0, big_u);
        if alpha_at(hi) <= half_pi {
            lo = big_u;
        } else {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if alpha_at(mid) < half_pi {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
        let ua = lo;

        // Radial targets at R.
        let rho_r = q.sqrt();
        let l1 = delta * delta * big_r / q;
        let l2 = delta * delta / (q * q) - (delta.powi(4) * big_u) / (q * q);
        let t1 = l1 / (2.0 * big_r);
        let t2 = (l2 - 2.0 * t1) / (4.0 * big_u);
        let total = (rho_r / g10).ln() - kappa * alpha_r;
        let c = if delta == 0.0 {
            [0.0; 5]
        } else {
            let w = big_u - ua;
            if w <= 0.0 {
                return infeasible("angle never exceeds pi/2".into());
            }
            let c4 = t1 - kappa * e1;
            let c3 = c4 - (t2 - kappa * e2) * w / 4.0;
            let c2 = 5.0 * total / w - c3 - c4;
            if c2 < 0.0 || c3 < 0.0 || c4 < 0.0 {
                return infeasible(format!("radial coefficients c2 = {c2}, c3 = {c3}, c4 = {c4}"));
            }
            [0.0, 0.0, c2, c3, c4]
        };
        Ok(Self { delta, g10, kappa, big_r, big_u, b, ua, c })
    }

    /// Start of the flat tail, `R = 1 − ε₀`.
    pub fn tail_start(&self) -> f64 {
        self.big_r
    }

    /// `γ₁(0)`.
    pub fn gamma1_at_0(&self) -> f64 {
        self.g10
    }

    /// `[P, P_u, Q, Q_u]` at `u = r² ∈ [0, 1]`.
    pub fn u_jet(&self, u: f64) -> [f64; 4] {
        if u >= self.big_u {
            let r = u.sqrt();
            let dp = if r > 0.0 { -self.delta / (2.0 * r) } else { 0.0 };
            return [-self.delta * r, dp, 1.0, 0.0];
        }
        let x = u / self.big_u;
        let alpha = self.big_u * bern4_integral(&self.b, x);
        let alpha_u = bern4(&self.b, x);
        let (corr, corr_u) = if u > self.ua {
            let w = self.big_u - self.ua;
            let y = (u - self.ua) / w;
            (w * bern4_integral(&self.c, y), bern4(&self.c, y))
        } else {
            (0.0, 0.0)
        };
        let rho = (self.g10.ln() + self.kappa * alpha + corr).exp();
        let rho_u = rho * (self.kappa * alpha_u + corr_u);
        let (s, c) = alpha.sin_cos();
        [rho * c, rho_u * c - rho * alpha_u * s, rho * s, rho_u * s + rho * alpha_u * c]
    }

    /// Sample the curve into spline knots: `m` knots uniform in `u` on
    /// `[0, R²]` plus the tail knots `R`, `(R+1)/2`, `1`.
    pub fn knots(&self, m: usize) -> Vec<Knot> {
        let mut out = Vec::with_capacity(m + 3);
        out.push(Knot {
            r: 0.0,
            g1: self.g10,
            dg1: self.g10 * self.kappa * self.b[0],
            g2: 0.0,
            dg2: self.g10 * self.b[0],
        });
        for j in 1..m {
            let u = self.big_u * j as f64 / m as f64;
            let r = u.sqrt();
            let [p, pu, q, qu] = self.u_jet(u);
            out.push(Knot { r, g1: p, dg1: 2.0 * r * pu, g2: q, dg2: 2.0 * r * qu });
        }
        for r in [self.big_r, 0.5 * (self.big_r + 1.0), 1.0] {
            out.push(Knot { r, g1: -self.delta * r, dg1: -self.delta, g2: 1.0, dg2: 0.0 });
        }
        out
    }
}

fn check_design_inputs(delta: f64, eps0: f64, g10: f64, kappa: f64) -> Result<()> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::Precondition(format!("delta = {delta} must be nonnegative")));
    }
    if !(eps0 > 0.0 && eps0 < 0.5) {
        return Err(Error::Precondition(format!("eps0 = {eps0} not in (0, 1/2)")));
    }
    if !(g10 > 0.0 && g10.is_finite()) {
        return Err(Error::Precondition(format!("gamma1_at_0 = {g10} must be positive")));
    }
    if !(kappa <= -0.5) {
        return Err(Error::Precondition(format!("kappa = {kappa} > -1/2")));
    }
    if (kappa - kappa.round()).abs() <= STRICT_TOL {
        return Err(Error::Precondition(format!("kappa = {kappa} is an integer")));
    }
    Ok(())
}

/// Sign checks of `μ` and `γ₁'` on a dense grid over `(0, r_max]`.
fn dense_sign_check(p: &BindingProfile, strict_tail: bool) -> bool {
    let n = 4000;
    let rmax = p.r_max();
    let tail = 1.0 - 1e-9;
    (1..=n).all(|i| {
        let r = rmax * i as f64 / n as f64;
        let j = p.u_jet_unchecked(r);
        let mu = 2.0 * r * j.w1();
        let ok_mu = if strict_tail { mu > STRICT_TOL } else { mu >= -STRICT_TOL || r > tail };
        ok_mu && j.p[1] < 0.0
    })
}

/// Budget of knot doublings in [`design_interpolation_curve`].
pub const DESIGN_DOUBLINGS: usize = 8;

/// Build the spline profile of the interpolation curve.
///
/// The analytic [`DesignCurve`] is sampled at 16 knots in `u`; the knot
/// count doubles until the spline passes the dense sign checks and
/// [`validate_local_model`], within [`DESIGN_DOUBLINGS`] doublings.
pub fn design_interpolation_curve(
    delta: f64,
    eps0: f64,
    gamma1_at_0: f64,
    kappa_target: f64,
) -> Result<BindingProfile> {
    let curve = DesignCurve::new(delta, eps0, gamma1_at_0, kappa_target)?;
    let params = ProfileParams { t: gamma1_at_0, k: -kappa_target / gamma1_at_0, delta };
    let mut m = 16;
    for _ in 0..=DESIGN_DOUBLINGS {
        let p = BindingProfile::spline(params, curve.knots(m))?;
        if dense_sign_check(&p, true) && validate_local_model(&p, 256)?.passed {
            return Ok(p);
        }
        m *= 2;
    }
    Err(Error::Numeric(format!(
        "interpolation curve infeasible: no knot count up to {} gives mu > 0 and gamma_1' < 0",
        m / 2
    )))
}

//! Fixed-point solves of `∂̄u − μ∂u = σ`, normalized quasiconformal maps and
//! the Hölder-space solver `w = g + Tw` on a small disk.

use num_complex::Complex64;
use serde::Serialize;

use super::grid::GridField;
use super::transforms::Transforms;
use crate::error::{Error, Result};

/// Iteration cap for the contraction solve.
pub const MAX_ITERATIONS: usize = 500;

/// Successive non-decreasing increments that signal non-contraction.
pub const STALL_WINDOW: usize = 10;

/// A Beltrami coefficient on the grid: zero outside the closed unit disk
/// with `‖μ‖∞ < 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeltramiCoefficient {
    field: GridField,
    sup: f64,
}

impl BeltramiCoefficient {
    /// Validate `mu`. Values outside the closed unit disk are discarded
    /// with a warning.
    pub fn new(mut mu: GridField) -> Result<Self> {
        let mut discarded = 0usize;
        let n = mu.n();
        for k in 0..n * n {
            if mu.point_at(k).norm_sqr() > 1.0 && mu.values()[k] != Complex64::new(0.0, 0.0) {
                mu.values_mut()[k] = Complex64::new(0.0, 0.0);
                discarded += 1;
            }
        }
        if discarded > 0 {
            log::warn!("discarded {discarded} Beltrami samples outside the unit disk");
        }
        let sup = mu.sup_norm();
        if !(sup < 1.0) {
            return Err(Error::Precondition(format!("Beltrami coefficient has sup norm {sup} >= 1")));
        }
        Ok(Self { field: mu, sup })
    }

    /// Sample `f` on the grid and validate.
    pub fn from_fn(n: usize, extent: f64, f: impl Fn(Complex64) -> Complex64 + Sync) -> Result<Self> {
        Self::new(GridField::from_fn(n, extent, f)?)
    }

    pub fn field(&self) -> &GridField {
        &self.field
    }

    /// Cached `‖μ‖∞`.
    pub fn sup_norm(&self) -> f64 {
        self.sup
    }

    pub fn is_zero(&self) -> bool {
        self.sup == 0.0
    }
}

/// The radial stretch `((K−1)/(K+1)) z/z̄` on the unit disk (zero at the origin),
/// restricted to `r_inner ≤ |z| ≤ 1`.
pub fn radial_stretch(n: usize, extent: f64, k: f64, r_inner: f64) -> Result<BeltramiCoefficient> {
    let c = (k - 1.0) / (k + 1.0);
    BeltramiCoefficient::from_fn(n, extent, |z| {
        let r = z.norm();
        if r == 0.0 || r < r_inner || r > 1.0 {
            Complex64::new(0.0, 0.0)
        } else {
            c * z / z.conj()
        }
    })
}

/// Output of [`solve_inhomogeneous`].
#[derive(Debug, Clone, PartialEq)]
pub struct InhomogeneousSolution {
    pub u: GridField,
    /// `q = ∂u`.
    pub q: GridField,
    /// `∂̄u = μ q_prev + σ` from the last iterate.
    pub dbar_u: GridField,
    pub iterations: usize,
    pub contraction_rate: f64,
    /// `L^p` norms of successive increments of `q`.
    pub increments: Vec<f64>,
    /// `‖∂̄u − μ∂u − σ‖₂ / ‖σ‖₂` with the spectral identities `∂̄A = 1`, `∂A = Γ`.
    pub residual: f64,
    /// Measured `‖q‖_p / ‖σ‖_p`.
    pub q_over_sigma: f64,
}

impl InhomogeneousSolution {
    /// `1 + ⌈log tol / log rate⌉`: the iteration count a pure geometric
    /// decay at the measured rate would need.
    pub fn predicted_iterations(&self, tol: f64) -> usize {
        if self.contraction_rate <= 0.0 {
            return 1;
        }
        1 + (tol.ln() / self.contraction_rate.ln()).ceil() as usize
    }
}

fn check_lp(p: f64, tol: f64) -> Result<()> {
    if !(p > 2.0) {
        return Err(Error::Precondition(format!("p = {p} must exceed 2")));
    }
    if !(tol > 0.0) {
        return Err(Error::Precondition(format!("tol = {tol} must be positive")));
    }
    Ok(())
}

/// Solve `∂̄u − μ∂u = σ` by iterating `q ← Γ(μq + σ)` and setting `u = A(μq + σ)`.
///
/// Stops when the `L^p` increment falls below `tol` times the first one.
pub fn solve_inhomogeneous(
    mu: &BeltramiCoefficient,
    sigma: &GridField,
    p: f64,
    tol: f64,
) -> Result<InhomogeneousSolution> {
    check_lp(p, tol)?;
    if !mu.field.same_grid(sigma) {
        return Err(Error::Precondition("mu and sigma live on different grids".into()));
    }
    let tr = Transforms::for_field(sigma)?;
    solve_with(&tr, mu, sigma, p, tol)
}

pub(crate) fn solve_with(
    tr: &Transforms,
    mu: &BeltramiCoefficient,
    sigma: &GridField,
    p: f64,
    tol: f64,
) -> Result<InhomogeneousSolution> {
    let sigma_p = sigma.lp_norm(p);
    if sigma_p == 0.0 {
        let zero = GridField::zeros(sigma.n(), sigma.extent())?;
        return Ok(InhomogeneousSolution {
            u: zero.clone(),
            q: zero.clone(),
            dbar_u: zero,
            iterations: 0,
            contraction_rate: 0.0,
            increments: Vec::new(),
            residual: 0.0,
            q_over_sigma: 0.0,
        });
    }
    let rhs = |q: &GridField| mu.field.zip_map(q, |m, v| m * v).zip_map(sigma, |a, s| a + s);
    let mut q = GridField::zeros(sigma.n(), sigma.extent())?;
    let mut increments: Vec<f64> = Vec::new();
    let mut stall = 0usize;
    loop {
        let g = rhs(&q);
        let (u, next) = tr.cauchy_beurling(&g);
        let d = next.zip_map(&q, |a, b| a - b).lp_norm(p);
        if let Some(&last) = increments.last() {
            stall = if d >= last { stall + 1 } else { 0 };
        }
        increments.push(d);
        let k = increments.len();
        let converged = d <= tol * increments[0] || mu.is_zero();
        if converged {
            let rate = if k >= 2 && increments[0] > 0.0 { (d / increments[0]).powf(1.0 / (k - 1) as f64) } else { 0.0 };
            let residual = mu.field.zip_map(&next.zip_map(&q, |a, b| a - b), |m, v| m * v).l2_norm() / sigma.l2_norm();
            let q_over_sigma = next.lp_norm(p) / sigma_p;
            return Ok(InhomogeneousSolution {
                u,
                q: next,
                dbar_u: g,
                iterations: k,
                contraction_rate: rate,
                increments,
                residual,
                q_over_sigma,
            });
        }
        if stall >= STALL_WINDOW || k >= MAX_ITERATIONS {
            let rates: Vec<f64> = increments.windows(2).map(|w| w[1] / w[0]).collect();
            let detail = if stall >= STALL_WINDOW {
                format!("increments did not decrease over {STALL_WINDOW} successive iterates")
            } else {
                format!("no convergence to tol {tol:e} within {MAX_ITERATIONS} iterations")
            };
            return Err(Error::NonContraction { detail, rates });
        }
        q = next;
    }
}

/// A normalized quasiconformal map `α(z) = z + u(z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QcMap {
    /// `α(z) − z` on the grid.
    pub displacement: GridField,
    /// `∂α` on the grid.
    pub d_alpha: GridField,
    /// `∂̄α` on the grid.
    pub dbar_alpha: GridField,
    pub iterations: usize,
    pub contraction_rate: f64,
    pub predicted_iterations: usize,
    /// Smallest `|∂α|² − |∂̄α|²` over the grid.
    pub jacobian_min: f64,
    pub jacobian_ok: bool,
}

impl QcMap {
    /// `α(z)` at every node.
    pub fn alpha(&self) -> GridField {
        self.displacement.map(|z, u| z + u)
    }
}

/// Solve `∂̄α = μ∂α` with `α(0) = 0` and `∂α − 1 ∈ L^p`.
///
/// `μ = 0` short-circuits to the identity.
pub fn normalized_qc_map(mu: &BeltramiCoefficient, p: f64, tol: f64) -> Result<QcMap> {
    check_lp(p, tol)?;
    let (n, l) = (mu.field.n(), mu.field.extent());
    if mu.is_zero() {
        let zero = GridField::zeros(n, l)?;
        return Ok(QcMap {
            displacement: zero.clone(),
            d_alpha: GridField::new(n, l, vec![Complex64::new(1.0, 0.0); n * n])?,
            dbar_alpha: zero,
            iterations: 0,
            contraction_rate: 0.0,
            predicted_iterations: 0,
            jacobian_min: 1.0,
            jacobian_ok: true,
        });
    }
    let tr = Transforms::new(n, l)?;
    let sol = solve_with(&tr, mu, &mu.field, p, tol)?;
    let d_alpha = sol.q.map(|_, q| q + 1.0);
    let predicted_iterations = sol.predicted_iterations(tol);
    let dbar_alpha = sol.dbar_u;
    let jacobian_min = d_alpha
        .values()
        .iter()
        .zip(dbar_alpha.values())
        .map(|(a, b)| a.norm_sqr() - b.norm_sqr())
        .fold(f64::INFINITY, f64::min);
    Ok(QcMap {
        displacement: sol.u,
        d_alpha,
        dbar_alpha,
        iterations: sol.iterations,
        contraction_rate: sol.contraction_rate,
        predicted_iterations,
        jacobian_min,
        jacobian_ok: jacobian_min > 0.0,
    })
}

/// `W^{1,p}` distance of two maps over `|z| ≤ radius`, from the values and
/// the spectral `∂`, `∂̄` of each map.
pub fn w1p_distance(a: &QcMap, b: &QcMap, p: f64, radius: f64) -> f64 {
    let du = a.displacement.zip_map(&b.displacement, |x, y| x - y);
    let dd = a.d_alpha.zip_map(&b.d_alpha, |x, y| x - y);
    let db = a.dbar_alpha.zip_map(&b.dbar_alpha, |x, y| x - y);
    (du.lp_norm_in(p, radius).powf(p) + dd.lp_norm_in(p, radius).powf(p) + db.lp_norm_in(p, radius).powf(p))
        .powf(1.0 / p)
}

/// Output of [`holder_solve`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderSolution {
    /// `w` on the grid.
    #[serde(skip)]
    pub w: GridField,
    /// `∂w` on the grid.
    #[serde(skip)]
    pub dw: GridField,
    pub iterations: usize,
    /// Ratios of successive increments in the norm `sup|w| + sup|∂w| + [∂w]_α` on `B_R`.
    pub ratios: Vec<f64>,
    /// Largest measured ratio, the empirical `θ`.
    pub theta: f64,
    /// `sup_{B_R} |∂̄w − μ∂w − γw − δ|`.
    pub residual: f64,
}

/// Hölder seminorm of exponent `a` on `|z| ≤ radius`, over grid offsets of
/// 1, 2, 4 and 8 cells along both axes.
fn holder_seminorm(f: &GridField, a: f64, radius: f64) -> f64 {
    let n = f.n();
    let h = f.h();
    let mut best = 0.0f64;
    for s in [1usize, 2, 4, 8] {
        let dist = (s as f64 * h).powf(a);
        for iy in 0..n {
            for ix in 0..n {
                if f.point(ix, iy).norm() > radius {
                    continue;
                }
                for (jx, jy) in [(ix + s, iy), (ix, iy + s)] {
                    if jx < n && jy < n && f.point(jx, jy).norm() <= radius {
                        best = best.max((f.get(ix, iy) - f.get(jx, jy)).norm() / dist);
                    }
                }
            }
        }
    }
    best
}

/// Solve `∂̄w = μ∂w + γw + δ` on `B_R` with `w(0) = 0`, `∂w(0) = 1` by
/// iterating `w ← g + Tw` with `Tw = A(μ∂w + γw) − z Γ(μ∂w + γw)(0)` and
/// `g = Aδ − z(Γδ)(0) + z`. Coefficients are cut off outside `B_R`.
pub fn holder_solve(
    mu: &GridField,
    gamma: &GridField,
    delta: &GridField,
    radius: f64,
    alpha_h: f64,
    tol: f64,
) -> Result<HolderSolution> {
    if !(alpha_h > 0.0 && alpha_h < 1.0) {
        return Err(Error::Precondition(format!("Hölder exponent {alpha_h} must lie in (0, 1)")));
    }
    if !(radius > 0.0 && radius <= 1.0) {
        return Err(Error::Precondition(format!("radius {radius} must lie in (0, 1]")));
    }
    if !(tol > 0.0) {
        return Err(Error::Precondition(format!("tol = {tol} must be positive")));
    }
    if !mu.same_grid(gamma) || !mu.same_grid(delta) {
        return Err(Error::Precondition("coefficients live on different grids".into()));
    }
    let cut = |f: &GridField| f.map(|z, v| if z.norm() <= radius { v } else { Complex64::new(0.0, 0.0) });
    let (mu, gamma, delta) = (cut(mu), cut(gamma), cut(delta));
    if mu.sup_norm() >= 1.0 {
        return Err(Error::Precondition("sup |mu| on B_R must be below 1".into()));
    }
    let tr = Transforms::for_field(&mu)?;
    let norm = |w: &GridField, dw: &GridField| {
        w.sup_norm_in(radius) + dw.sup_norm_in(radius) + holder_seminorm(dw, alpha_h, radius)
    };

    let (ad, gd) = tr.cauchy_beurling(&delta);
    let gd0 = gd.at_origin();
    let g = ad.map(|z, v| v - z * gd0 + z);
    let dg = gd.map(|_, v| v - gd0 + 1.0);

    let mut w = g.clone();
    let mut dw = dg.clone();
    let mut ratios = Vec::new();
    let mut prev_step: Option<f64> = None;
    let mut iterations = 0;
    loop {
        let f = mu.zip_map(&dw, |m, d| m * d).zip_map(&gamma.zip_map(&w, |c, v| c * v), |a, b| a + b);
        let (af, gf) = tr.cauchy_beurling(&f);
        let gf0 = gf.at_origin();
        let w_next = g.zip_map(&af, |a, b| a + b).map(|z, v| v - z * gf0);
        let dw_next = dg.zip_map(&gf, |a, b| a + b - gf0);
        let step = norm(&w_next.zip_map(&w, |a, b| a - b), &dw_next.zip_map(&dw, |a, b| a - b));
        iterations += 1;
        if let Some(ps) = prev_step {
            if ps > 0.0 {
                ratios.push(step / ps);
            }
        }
        let theta = ratios.iter().cloned().fold(0.0, f64::max);
        if ratios.len() >= 3 && theta >= 1.0 {
            return Err(Error::NonContraction {
                detail: format!("Hölder iteration norm ratio {theta} >= 1; shrink R"),
                rates: ratios,
            });
        }
        let scale = norm(&w_next, &dw_next);
        let done = step <= tol * scale || iterations >= MAX_ITERATIONS;
        // Residual of the equation at the last iterate: ∂̄w_next = f(w) + δ.
        if done {
            if step > tol * scale {
                return Err(Error::NonContraction {
                    detail: format!("no convergence within {MAX_ITERATIONS} iterations"),
                    rates: ratios,
                });
            }
            let f_next =
                mu.zip_map(&dw_next, |m, d| m * d).zip_map(&gamma.zip_map(&w_next, |c, v| c * v), |a, b| a + b);
            let residual = f.zip_map(&f_next, |a, b| a - b).sup_norm_in(radius);
            return Ok(HolderSolution { w: w_next, dw: dw_next, iterations, theta, ratios, residual });
        }
        prev_step = Some(step);
        w = w_next;
        dw = dw_next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficient_checks_sup_norm() {
        assert!(BeltramiCoefficient::from_fn(64, 4.0, |_| Complex64::new(0.0, 0.0)).is_ok());
        let bad = BeltramiCoefficient::from_fn(64, 4.0, |z| {
            if z.norm() < 0.5 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        assert!(bad.is_err());
    }

    #[test]
    fn outside_values_are_discarded() {
        let mu = BeltramiCoefficient::from_fn(64, 4.0, |_| Complex64::new(0.2, 0.0)).unwrap();
        assert_eq!(mu.field().get(0, 0), Complex64::new(0.0, 0.0));
        assert_eq!(mu.field().at_origin(), Complex64::new(0.2, 0.0));
    }

    #[test]
    fn zero_coefficient_is_identity() {
        let mu = BeltramiCoefficient::from_fn(64, 4.0, |_| Complex64::new(0.0, 0.0)).unwrap();
        let map = normalized_qc_map(&mu, 4.0, 1e-10).unwrap();
        assert!(map.displacement.values().iter().all(|v| *v == Complex64::new(0.0, 0.0)));
        assert_eq!(map.iterations, 0);
    }

    #[test]
    fn lp_preconditions() {
        let mu = radial_stretch(64, 4.0, 2.0, 0.0).unwrap();
        assert!(normalized_qc_map(&mu, 2.0, 1e-8).is_err());
        assert!(normalized_qc_map(&mu, 4.0, 0.0).is_err());
    }
}

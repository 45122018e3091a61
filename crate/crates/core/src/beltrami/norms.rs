//! Beltrami coefficients of Riemannian metrics and the `B_p` norm.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::grid::GridField;
use super::solver::BeltramiCoefficient;
use crate::error::{Error, Result};

/// Seed of the randomized Hölder pair sample.
pub const BP_SEED: u64 = 0x5EED;

/// Number of random pairs in the Hölder sample.
pub const BP_RANDOM_PAIRS: usize = 10_000;

/// `(½(g₁₁−g₂₂) + i g₁₂) / (½(g₁₁+g₂₂) + √(g₁₁g₂₂ − g₁₂²))` for one metric sample.
pub fn metric_coefficient(g11: f64, g12: f64, g22: f64) -> Result<Complex64> {
    let det = g11 * g22 - g12 * g12;
    if !(g11 > 0.0) || !(det > 0.0) {
        return Err(Error::Precondition(format!("metric ({g11}, {g12}, {g22}) is not positive definite")));
    }
    Ok(Complex64::new(0.5 * (g11 - g22), g12) / (0.5 * (g11 + g22) + det.sqrt()))
}

/// Beltrami coefficient of a metric sampled on the grid, `values[iy * n + ix]`.
pub fn coefficient_from_metric(
    n: usize,
    extent: f64,
    g11: &[f64],
    g12: &[f64],
    g22: &[f64],
) -> Result<BeltramiCoefficient> {
    if g11.len() != n * n || g12.len() != n * n || g22.len() != n * n {
        return Err(Error::Precondition(format!("metric components must have {} samples", n * n)));
    }
    let values = (0..n * n).map(|k| metric_coefficient(g11[k], g12[k], g22[k])).collect::<Result<Vec<_>>>()?;
    BeltramiCoefficient::new(GridField::new(n, extent, values)?)
}

/// The three parts of the `B_p` norm on a disk window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BpNormReport {
    /// Sampled `sup |u(z₁)−u(z₂)| / |z₁−z₂|^{1−2/p}`.
    pub holder_part: f64,
    pub dbar_lp: f64,
    pub d_lp: f64,
    pub total: f64,
    pub p: f64,
}

/// Difference quotient from the neighbors that lie in the window: central
/// when both do, one-sided when one does, undefined when neither does.
fn window_diff(b: Option<Complex64>, c: Complex64, f: Option<Complex64>, h: f64) -> Option<Complex64> {
    match (b, f) {
        (Some(b), Some(f)) => Some((f - b) / (2.0 * h)),
        (Some(b), None) => Some((c - b) / h),
        (None, Some(f)) => Some((f - c) / h),
        (None, None) => None,
    }
}

/// `B_p` norm of `u` restricted to the disk `|z| ≤ radius`.
///
/// The Hölder part is the maximum over every neighbor pair, every antipodal
/// pair `(z, −z)` and [`BP_RANDOM_PAIRS`] random pairs of nodes in the window.
/// Derivatives use differences between window nodes only, so a jump at the
/// window boundary does not leak into the `L^p` parts; nodes with no window
/// neighbor along an axis are left out of those sums.
pub fn bp_norm(u: &GridField, p: f64, radius: f64) -> Result<BpNormReport> {
    if !(p > 2.0) {
        return Err(Error::Precondition(format!("B_p norm needs p > 2, got {p}")));
    }
    let scale = u.sup_norm().max(1.0);
    if u.at_origin().norm() > 1e-9 * scale {
        return Err(Error::Precondition(format!("u(0) = {} must vanish", u.at_origin())));
    }
    let n = u.n();
    let h = u.h();
    let expo = 1.0 - 2.0 / p;
    let inside: Vec<usize> = (0..n * n).filter(|&k| u.point_at(k).norm() <= radius).collect();
    let v = u.values();
    let quotient = |a: usize, b: usize| {
        let d = (u.point_at(a) - u.point_at(b)).norm();
        if d == 0.0 {
            0.0
        } else {
            (v[a] - v[b]).norm() / d.powf(expo)
        }
    };
    let mut holder: f64 = 0.0;
    let in_window = |ix: usize, iy: usize| u.point(ix, iy).norm() <= radius;
    for &k in &inside {
        let (ix, iy) = (k % n, k / n);
        if ix + 1 < n && in_window(ix + 1, iy) {
            holder = holder.max(quotient(k, k + 1));
        }
        if iy + 1 < n && in_window(ix, iy + 1) {
            holder = holder.max(quotient(k, k + n));
        }
        // The node at −z has indices (n − ix, n − iy).
        if ix > 0 && iy > 0 && in_window(n - ix, n - iy) {
            holder = holder.max(quotient(k, (n - iy) * n + (n - ix)));
        }
    }
    if inside.len() > 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(BP_SEED);
        for _ in 0..BP_RANDOM_PAIRS {
            let a = inside[rng.random_range(0..inside.len())];
            let b = inside[rng.random_range(0..inside.len())];
            holder = holder.max(quotient(a, b));
        }
    }
    let (mut sd, mut sdb) = (0.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    for &k in &inside {
        let (ix, iy) = (k % n, k / n);
        let at = |jx: usize, jy: usize| (jx < n && jy < n && in_window(jx, jy)).then(|| v[jy * n + jx]);
        let left = ix.checked_sub(1).and_then(|j| at(j, iy));
        let down = iy.checked_sub(1).and_then(|j| at(ix, j));
        let (Some(ux), Some(uy)) =
            (window_diff(left, v[k], at(ix + 1, iy), h), window_diff(down, v[k], at(ix, iy + 1), h))
        else {
            continue;
        };
        sd += ((ux - i * uy) * 0.5).norm().powf(p);
        sdb += ((ux + i * uy) * 0.5).norm().powf(p);
    }
    let h2 = h * h;
    let d_lp = (sd * h2).powf(1.0 / p);
    let dbar_lp = (sdb * h2).powf(1.0 / p);
    Ok(BpNormReport { holder_part: holder, dbar_lp, d_lp, total: holder + dbar_lp + d_lp, p })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_examples() {
        assert_eq!(metric_coefficient(1.0, 0.0, 1.0).unwrap(), Complex64::new(0.0, 0.0));
        assert!((metric_coefficient(4.0, 0.0, 1.0).unwrap() - 1.0 / 3.0).norm() < 1e-15);
        assert!(metric_coefficient(1.0, 1.0, 1.0).is_err());
        assert!(metric_coefficient(-1.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn zero_field_has_zero_norm() {
        let u = GridField::zeros(32, 2.0).unwrap();
        let r = bp_norm(&u, 4.0, 1.0).unwrap();
        assert_eq!(r.total, 0.0);
    }

    #[test]
    fn nonzero_origin_is_rejected() {
        let u = GridField::from_fn(32, 2.0, |z| z + 1.0).unwrap();
        assert!(bp_norm(&u, 4.0, 1.0).is_err());
    }
}

//! Numerical inversion of a quasiconformal map and the Beltrami coefficient
//! `ν = −(∂α/∂̄ᾱ)(α⁻¹) · μ(α⁻¹)` of its inverse.

use num_complex::Complex64;
use rayon::prelude::*;

use super::grid::GridField;
use super::solver::{BeltramiCoefficient, QcMap};
use crate::error::{Error, Result};

/// Forward-residual tolerance of the Newton inversion.
pub const INVERSION_TOL: f64 = 1e-10;

const NEWTON_STEPS: usize = 60;

/// Preimages farther out than this may fail to invert without error: the
/// coefficient vanishes there.
const FAILURE_RADIUS: f64 = 1.5;

fn keys(x: f64) -> (f64, f64) {
    const A: f64 = -0.5;
    let ax = x.abs();
    let sg = x.signum();
    if ax <= 1.0 {
        ((A + 2.0) * ax.powi(3) - (A + 3.0) * ax * ax + 1.0, sg * (3.0 * (A + 2.0) * ax * ax - 2.0 * (A + 3.0) * ax))
    } else if ax < 2.0 {
        (
            A * ax.powi(3) - 5.0 * A * ax * ax + 8.0 * A * ax - 4.0 * A,
            sg * (3.0 * A * ax * ax - 10.0 * A * ax + 8.0 * A),
        )
    } else {
        (0.0, 0.0)
    }
}

/// Bicubic (Keys) interpolation with its `x` and `y` derivatives.
pub fn bicubic(f: &GridField, z: Complex64) -> (Complex64, Complex64, Complex64) {
    let n = f.n() as i64;
    let h = f.h();
    let fx = (z.re + f.extent()) / h;
    let fy = (z.im + f.extent()) / h;
    let (ix, iy) = (fx.floor() as i64, fy.floor() as i64);
    let mut v = Complex64::new(0.0, 0.0);
    let mut dx = v;
    let mut dy = v;
    for ky in iy - 1..=iy + 2 {
        let (wy, dwy) = keys(fy - ky as f64);
        let cy = ky.clamp(0, n - 1) as usize;
        for kx in ix - 1..=ix + 2 {
            let (wx, dwx) = keys(fx - kx as f64);
            let s = f.get(kx.clamp(0, n - 1) as usize, cy);
            v += s * (wx * wy);
            dx += s * (dwx * wy / h);
            dy += s * (wx * dwy / h);
        }
    }
    (v, dx, dy)
}

/// Bilinear interpolation; a convex combination of the four corner values.
pub fn bilinear(f: &GridField, z: Complex64) -> Complex64 {
    let n = f.n() as i64;
    let h = f.h();
    let fx = (z.re + f.extent()) / h;
    let fy = (z.im + f.extent()) / h;
    let (ix, iy) = (fx.floor() as i64, fy.floor() as i64);
    let (tx, ty) = (fx - ix as f64, fy - iy as f64);
    let g = |a: i64, b: i64| f.get(a.clamp(0, n - 1) as usize, b.clamp(0, n - 1) as usize);
    g(ix, iy) * ((1.0 - tx) * (1.0 - ty))
        + g(ix + 1, iy) * (tx * (1.0 - ty))
        + g(ix, iy + 1) * ((1.0 - tx) * ty)
        + g(ix + 1, iy + 1) * (tx * ty)
}

fn node_of(f: &GridField, z: Complex64) -> (usize, usize) {
    let n = f.n() as f64;
    let h = f.h();
    let cx = ((z.re + f.extent()) / h).round().clamp(0.0, n - 1.0) as usize;
    let cy = ((z.im + f.extent()) / h).round().clamp(0.0, n - 1.0) as usize;
    (cx, cy)
}

/// Solve `α(z) = w` for `z`, where `α(z) = z + displacement(z)`.
///
/// Seeded by a descent walk over grid nodes from `seed`, then Newton on the
/// bicubic interpolant with backtracking.
pub fn invert_point(displacement: &GridField, w: Complex64, seed: Complex64) -> Result<Complex64> {
    let n = displacement.n();
    let miss = |ix: usize, iy: usize| (displacement.point(ix, iy) + displacement.get(ix, iy) - w).norm();
    let (mut cx, mut cy) = node_of(displacement, seed);
    let mut best = miss(cx, cy);
    loop {
        let mut moved = false;
        for (ddx, ddy) in [(-1i64, -1i64), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)] {
            let (jx, jy) = (cx as i64 + ddx, cy as i64 + ddy);
            if jx < 0 || jy < 0 || jx >= n as i64 || jy >= n as i64 {
                continue;
            }
            let m = miss(jx as usize, jy as usize);
            if m < best {
                best = m;
                cx = jx as usize;
                cy = jy as usize;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    let mut z = displacement.point(cx, cy);
    let eval = |z: Complex64| {
        let (u, ux, uy) = bicubic(displacement, z);
        (z + u - w, ux, uy)
    };
    let (mut f, mut ux, mut uy) = eval(z);
    let lim = displacement.extent() - 2.0 * displacement.h();
    for _ in 0..NEWTON_STEPS {
        if f.norm() < INVERSION_TOL {
            return Ok(z);
        }
        // Real Jacobian of z ↦ z + u(z).
        let (a, b, c, d) = (1.0 + ux.re, uy.re, ux.im, 1.0 + uy.im);
        let det = a * d - b * c;
        if !(det.abs() > 1e-300) {
            break;
        }
        let step = Complex64::new((d * f.re - b * f.im) / det, (-c * f.re + a * f.im) / det);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let zt = z - step * t;
            let (ft, uxt, uyt) = eval(zt);
            if ft.norm() < f.norm() {
                z = zt;
                f = ft;
                ux = uxt;
                uy = uyt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted || z.re.abs() > lim || z.im.abs() > lim {
            break;
        }
    }
    if f.norm() < INVERSION_TOL {
        Ok(z)
    } else {
        Err(Error::Numeric(format!("inversion of w = {w} stalled at residual {:e}", f.norm())))
    }
}

/// The inverse map and its Beltrami coefficient on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseCoefficient {
    /// `ν` at every node.
    pub nu: GridField,
    /// `α⁻¹(w) − w` at every node.
    pub inverse_displacement: GridField,
    /// Nodes whose preimage lies beyond the failure radius and did not
    /// converge; there `ν = 0` and the inverse uses `w − u(w)`.
    pub far_failures: usize,
}

/// Compose `−μ ∂α/conj(∂α)` with the numerically inverted map.
pub fn inverse_coefficient(mu: &BeltramiCoefficient, map: &QcMap) -> Result<InverseCoefficient> {
    if !map.jacobian_ok {
        return Err(Error::Precondition("map has a nonpositive Jacobian; cannot invert".into()));
    }
    let disp = &map.displacement;
    if !mu.field().same_grid(disp) {
        return Err(Error::Precondition("mu and the map live on different grids".into()));
    }
    let n = disp.n();
    if mu.is_zero() {
        let zero = GridField::zeros(n, disp.extent())?;
        return Ok(InverseCoefficient { nu: zero.clone(), inverse_displacement: zero, far_failures: 0 });
    }
    let kappa =
        mu.field().zip_map(
            &map.d_alpha,
            |m, d| {
                if d.norm() == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    -m * d / d.conj()
                }
            },
        );
    let results: Vec<Result<(Complex64, Complex64, bool)>> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let w = disp.point_at(k);
            let seed = w - disp.values()[k];
            match invert_point(disp, w, seed) {
                Ok(z) => Ok((bilinear(&kappa, z), z - w, false)),
                Err(e) => {
                    if seed.norm() > FAILURE_RADIUS {
                        Ok((Complex64::new(0.0, 0.0), seed - w, true))
                    } else {
                        Err(e)
                    }
                }
            }
        })
        .collect();
    let mut nu = Vec::with_capacity(n * n);
    let mut inv = Vec::with_capacity(n * n);
    let mut far_failures = 0;
    for r in results {
        let (a, b, far) = r?;
        nu.push(a);
        inv.push(b);
        far_failures += far as usize;
    }
    Ok(InverseCoefficient {
        nu: GridField::new(n, disp.extent(), nu)?,
        inverse_displacement: GridField::new(n, disp.extent(), inv)?,
        far_failures,
    })
}

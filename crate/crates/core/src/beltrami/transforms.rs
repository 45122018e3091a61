//! Cauchy and Beurling transforms as Fourier multipliers on the periodic box.
//!
//! `∂̄ ↔ (i k_x − k_y)/2`, `A ↔ 2/(i k_x − k_y)` and
//! `Γ ↔ (k_x − i k_y)/(k_x + i k_y)`. The zero mode of a disk-supported
//! `g` carries its mass `c = ∫ g`, which the periodic inverse cannot see. It
//! is split off as `c φ` with `φ = (7/π)(1 − |z|²)⁶` on the disk, whose
//! transforms are known in closed form: `Aφ = M/(πz)` and
//! `Γφ = φ z̄/z − M/(πz²)` with `M = 1 − (1 − |z|²)⁷` (and `M = 1` outside).

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

use super::grid::GridField;
use crate::error::{Error, Result};
use crate::numerics::Fft2;

/// Coarsest admissible spacing: eight cells per unit radius.
pub const MAX_SPACING: f64 = 0.125;

/// Mass outside the unit disk above which a warning is logged.
pub const TAIL_MASS_WARN: f64 = 1e-10;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Angular wavenumbers of the FFT ordering on a box of side `2L`.
pub(crate) fn wavenumbers(n: usize, extent: f64) -> Vec<f64> {
    let base = PI / extent;
    (0..n).map(|j| if j < n / 2 { j as f64 } else { j as f64 - n as f64 } * base).collect()
}

/// Apply the Fourier multiplier `m(k_x, k_y)` to a field.
pub(crate) fn apply_multiplier(fft: &Fft2, g: &GridField, m: impl Fn(f64, f64) -> Complex64 + Sync) -> GridField {
    let n = g.n();
    let k = wavenumbers(n, g.extent());
    let mut data = g.values().to_vec();
    fft.forward(&mut data);
    data.par_chunks_mut(n).enumerate().for_each(|(iy, row)| {
        for (ix, v) in row.iter_mut().enumerate() {
            *v *= m(k[ix], k[iy]);
        }
    });
    fft.inverse(&mut data);
    GridField::new(n, g.extent(), data).expect("multiplier keeps the grid shape")
}

/// Spectral `∂̄ = (∂x + i ∂y)/2` of a periodic field.
pub fn dbar_spectral(g: &GridField) -> GridField {
    apply_multiplier(&Fft2::new(g.n()), g, |kx, ky| Complex64::new(-ky, kx) * 0.5)
}

/// Spectral `∂ = (∂x − i ∂y)/2` of a periodic field.
pub fn d_spectral(g: &GridField) -> GridField {
    apply_multiplier(&Fft2::new(g.n()), g, |kx, ky| Complex64::new(ky, kx) * 0.5)
}

/// Fourth-order central differences `(∂g, ∂̄g)` at interior nodes.
///
/// The two outermost rings of nodes are left at zero.
pub fn d_dbar_fd4(g: &GridField) -> (GridField, GridField) {
    let n = g.n();
    let h = g.h();
    let v = g.values();
    let at = |ix: usize, iy: usize| v[iy * n + ix];
    let mut d = vec![ZERO; n * n];
    let mut db = vec![ZERO; n * n];
    for iy in 2..n - 2 {
        for ix in 2..n - 2 {
            let dx = (at(ix - 2, iy) - at(ix - 1, iy) * 8.0 + at(ix + 1, iy) * 8.0 - at(ix + 2, iy)) / (12.0 * h);
            let dy = (at(ix, iy - 2) - at(ix, iy - 1) * 8.0 + at(ix, iy + 1) * 8.0 - at(ix, iy + 2)) / (12.0 * h);
            let i_dy = Complex64::new(-dy.im, dy.re);
            d[iy * n + ix] = (dx - i_dy) * 0.5;
            db[iy * n + ix] = (dx + i_dy) * 0.5;
        }
    }
    (GridField::new(n, g.extent(), d).expect("same shape"), GridField::new(n, g.extent(), db).expect("same shape"))
}

/// The mass-one bump `(7/π)(1 − |z|²)⁶` on the unit disk.
pub fn monopole_bump(z: Complex64) -> f64 {
    let r2 = z.norm_sqr();
    if r2 >= 1.0 {
        0.0
    } else {
        7.0 / PI * (1.0 - r2).powi(6)
    }
}

fn monopole_mass(z: Complex64) -> f64 {
    let r2 = z.norm_sqr();
    if r2 >= 1.0 {
        1.0
    } else {
        1.0 - (1.0 - r2).powi(7)
    }
}

/// Closed-form `Aφ(z) = M(|z|)/(πz)`, zero at the origin.
pub fn monopole_cauchy(z: Complex64) -> Complex64 {
    if z == ZERO {
        return ZERO;
    }
    monopole_mass(z) / (PI * z)
}

/// Closed-form `Γφ(z) = φ z̄/z − M/(πz²)`, zero at the origin.
pub fn monopole_beurling(z: Complex64) -> Complex64 {
    if z == ZERO {
        return ZERO;
    }
    monopole_bump(z) * z.conj() / z - monopole_mass(z) / (PI * z * z)
}

/// Shared plan and monopole samples for repeated transforms on one grid.
pub struct Transforms {
    fft: Fft2,
    n: usize,
    extent: f64,
    kx: Vec<f64>,
    bump: Vec<f64>,
    bump_mass: f64,
    cauchy_bump: Vec<Complex64>,
    beurling_bump: Vec<Complex64>,
}

impl Transforms {
    /// Prepare transforms for an `n × n` grid on `[−L, L)²`.
    pub fn new(n: usize, extent: f64) -> Result<Self> {
        let probe = GridField::zeros(n, extent)?;
        if probe.h() > MAX_SPACING {
            return Err(Error::Precondition(format!(
                "spacing {} under-resolves the unit disk; need h <= {MAX_SPACING}",
                probe.h()
            )));
        }
        let pts: Vec<Complex64> = (0..n * n).map(|k| probe.point_at(k)).collect();
        let bump: Vec<f64> = pts.iter().map(|z| monopole_bump(*z)).collect();
        let bump_mass = bump.iter().sum::<f64>() * probe.h() * probe.h();
        Ok(Self {
            fft: Fft2::new(n),
            n,
            extent,
            kx: wavenumbers(n, extent),
            cauchy_bump: pts.par_iter().map(|z| monopole_cauchy(*z)).collect(),
            beurling_bump: pts.par_iter().map(|z| monopole_beurling(*z)).collect(),
            bump,
            bump_mass,
        })
    }

    /// Transforms for the grid of `g`.
    pub fn for_field(g: &GridField) -> Result<Self> {
        Self::new(g.n(), g.extent())
    }

    fn check(&self, g: &GridField) {
        assert!(g.n() == self.n && g.extent() == self.extent, "field does not match the prepared grid");
        let h2 = g.h() * g.h();
        let tail: f64 = g
            .values()
            .iter()
            .enumerate()
            .filter(|(k, _)| g.point_at(*k).norm_sqr() > 1.0 + 1e-12)
            .map(|(_, v)| v.norm())
            .sum::<f64>()
            * h2;
        if tail > TAIL_MASS_WARN {
            log::warn!("field has mass {tail:e} outside the unit disk");
        }
    }

    /// `(A g, Γ g)` sharing one forward FFT.
    pub fn cauchy_beurling(&self, g: &GridField) -> (GridField, GridField) {
        self.check(g);
        let n = self.n;
        let h2 = g.h() * g.h();
        let c = g.values().iter().sum::<Complex64>() * h2 / self.bump_mass;
        let mut data: Vec<Complex64> = g.values().iter().zip(&self.bump).map(|(v, b)| v - c * b).collect();
        self.fft.forward(&mut data);
        let mut beur = data.clone();
        let k = &self.kx;
        data.par_chunks_mut(n).zip(beur.par_chunks_mut(n)).enumerate().for_each(|(iy, (ra, rb))| {
            for ix in 0..n {
                let (kx, ky) = (k[ix], k[iy]);
                if kx == 0.0 && ky == 0.0 {
                    ra[ix] = ZERO;
                    rb[ix] = ZERO;
                } else {
                    ra[ix] *= 2.0 / Complex64::new(-ky, kx);
                    rb[ix] *= Complex64::new(kx, -ky) / Complex64::new(kx, ky);
                }
            }
        });
        self.fft.inverse(&mut data);
        self.fft.inverse(&mut beur);
        let origin = (n / 2) * n + n / 2;
        let shift = data[origin];
        let a: Vec<Complex64> = data.iter().zip(&self.cauchy_bump).map(|(v, cb)| v - shift + c * cb).collect();
        let b: Vec<Complex64> = beur.iter().zip(&self.beurling_bump).map(|(v, bb)| v + c * bb).collect();
        (GridField::new(n, self.extent, a).expect("same shape"), GridField::new(n, self.extent, b).expect("same shape"))
    }

    /// Normalized Cauchy transform `A g` with `A g(0) = 0`.
    pub fn cauchy(&self, g: &GridField) -> GridField {
        self.cauchy_beurling(g).0
    }

    /// Beurling transform `Γ g = ∂(A g)`.
    pub fn beurling(&self, g: &GridField) -> GridField {
        self.cauchy_beurling(g).1
    }
}

/// Normalized Cauchy transform of a disk-supported field.
pub fn cauchy_transform(g: &GridField) -> Result<GridField> {
    Ok(Transforms::for_field(g)?.cauchy(g))
}

/// Beurling transform of a disk-supported field.
pub fn beurling_transform(g: &GridField) -> Result<GridField> {
    Ok(Transforms::for_field(g)?.beurling(g))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monopole_closed_forms_agree_with_finite_differences() {
        let e = 1e-6;
        for z in [Complex64::new(0.3, 0.2), Complex64::new(-0.5, 0.6), Complex64::new(1.5, -0.4)] {
            let f = monopole_cauchy;
            let dx = (f(z + e) - f(z - e)) / (2.0 * e);
            let dy = (f(z + Complex64::new(0.0, e)) - f(z - Complex64::new(0.0, e))) / (2.0 * e);
            let i = Complex64::new(0.0, 1.0);
            let dbar = (dx + i * dy) * 0.5;
            let d = (dx - i * dy) * 0.5;
            assert!((dbar - monopole_bump(z)).norm() < 1e-7, "{z}");
            assert!((d - monopole_beurling(z)).norm() < 1e-7, "{z}");
        }
    }

    #[test]
    fn bump_has_unit_mass() {
        let t = Transforms::new(256, 4.0).unwrap();
        assert!((t.bump_mass - 1.0).abs() < 1e-6);
    }

    #[test]
    fn coarse_grids_are_rejected() {
        assert!(Transforms::new(32, 4.0).is_err());
    }
}

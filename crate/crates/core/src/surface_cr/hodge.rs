//! The `∂̄` operator for `j = i`, harmonic representatives for general `j`,
//! and the Fredholm bookkeeping of the truncated `∂̄`.
//!
//! Two normalizations appear. [`dbar_solve_torus`] works with
//! `∂̄ζ = ½(dζ + i dζ∘i)`, whose `ds`-component has symbol `(im − n)/2`.
//! [`dbar_form`] is the unnormalized `dζ + i dζ∘j` of the CR equation.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::Serialize;

use super::field::TorusField;
use super::forms::{standard_j, FormKind, StructureField, TorusOneForm};
use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Increment (relative to the class size) at which the elliptic solve stops.
pub const HODGE_TOL: f64 = 1e-14;

/// Iteration cap of the elliptic solve.
pub const HODGE_MAX_ITER: usize = 400;

/// Split of (0,1)-data into `∂̄ζ` plus a harmonic part.
#[derive(Debug, Clone, PartialEq)]
pub struct DbarSplit {
    /// Mean-zero solution of `∂̄ζ = σ − harmonic_part`.
    pub zeta: TorusField,
    /// `γ + i(γ∘i)` with constant real `γ`.
    pub harmonic_part: TorusOneForm,
    /// Class of that `γ`.
    pub harmonic_class: [f64; 2],
}

/// `Ψ(γ) = γ + i(γ∘i)` for the constant form of class `c`.
pub fn psi_standard(n_modes: usize, c: [f64; 2]) -> TorusOneForm {
    let w = Complex64::new(c[0], c[1]);
    TorusOneForm::new(TorusField::constant(n_modes, w), TorusField::constant(n_modes, -I * w))
}

/// The (0,1)-form for `j = i` with `ds`-component `w`: `w ds − i w dt`.
pub fn antilinear_form(w: TorusField) -> TorusOneForm {
    let dt = w.scale(-I);
    TorusOneForm { ds: w, dt, kind: FormKind::Complex }
}

/// Normalized `∂̄ζ = ½(dζ + i dζ∘i)` as a (0,1)-form.
pub fn dbar_normalized(zeta: &TorusField) -> TorusOneForm {
    antilinear_form(zeta.dbar())
}

/// `dζ + i dζ∘i`, twice [`dbar_normalized`].
pub fn dbar_form(zeta: &TorusField) -> TorusOneForm {
    antilinear_form(zeta.dbar().scale(Complex64::new(2.0, 0.0)))
}

/// Solve `∂̄ζ = σ` modulo harmonic (0,1)-forms for `j = i`.
///
/// Only the `ds`-component of `σ` is read; for (0,1)-data it determines the
/// form. The `(0,0)` mode is the harmonic part, every other mode divides by
/// `(im − n)/2`.
pub fn dbar_solve_torus(sigma: &TorusOneForm) -> DbarSplit {
    let w = &sigma.ds;
    let n_modes = w.n_modes();
    let zeta = TorusField::from_coeff_fn(n_modes, false, |m, n| {
        if m == 0 && n == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            w.coeff(m, n) / (Complex64::new(-(n as f64), m as f64) * 0.5)
        }
    });
    let h = w.mean();
    let class = [h.re, h.im];
    DbarSplit { zeta, harmonic_part: psi_standard(n_modes, class), harmonic_class: class }
}

/// `∂̄ζ + harmonic_part`.
pub fn reconstruct(split: &DbarSplit) -> TorusOneForm {
    dbar_normalized(&split.zeta).add(&split.harmonic_part)
}

/// Harmonic representative `ψ_j(c)`: the closed, `j`-co-closed real form with
/// class `c` (periods `2π c`), truncated to `n_modes`.
///
/// Writes `γ = c + du` and solves `P_N d((c + du)∘j) = 0` by the fixed point
/// `u ← u − Δ_J₀⁻¹ P_N d((c + du)∘j)`, which contracts for `j` near `i`.
/// Constant forms are returned as they are for `j = i` and for class zero.
pub fn hodge_representative(class: [f64; 2], j: &StructureField, n_modes: usize) -> Result<TorusOneForm> {
    hodge_solve(class, j, n_modes, None).map(|(g, _)| g)
}

/// [`hodge_representative`] started from the potential `warm`; returns the
/// form and its potential `u`.
pub(crate) fn hodge_solve(
    class: [f64; 2],
    j: &StructureField,
    n_modes: usize,
    warm: Option<&TorusField>,
) -> Result<(TorusOneForm, TorusField)> {
    let m = j.m();
    if m < 2 * n_modes + 2 {
        return Err(Error::Precondition(format!("structure grid {m} too coarse for N = {n_modes}")));
    }
    if !class.iter().all(|c| c.is_finite()) {
        return Err(Error::Precondition("class vector must be finite".into()));
    }
    let c = TorusOneForm::constant(n_modes, class);
    let zero = TorusField::zeros(n_modes, true);
    if class == [0.0, 0.0] || j.matrices().iter().all(|a| *a == standard_j()) {
        return Ok((c, zero));
    }
    let scale = class[0].hypot(class[1]);
    let mut u = warm.map_or(zero, |w| w.resize(n_modes));
    let mut increments = Vec::new();
    for _ in 0..HODGE_MAX_ITER {
        let gamma = c.add(&TorusOneForm::exact(&u));
        let r = gamma.to_grid(m).compose(j).to_form(n_modes, FormKind::Real).d();
        let step = TorusField::from_coeff_fn(n_modes, true, |a, b| {
            if a == 0 && b == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                r.coeff(a, b) / (a * a + b * b) as f64
            }
        });
        let inc = step.coeff_norm();
        u = u.sub(&step);
        increments.push(inc);
        if !inc.is_finite() {
            break;
        }
        if inc <= HODGE_TOL * scale {
            return Ok((c.add(&TorusOneForm::exact(&u)), u));
        }
        let k = increments.len();
        if k > 8 && increments[k - 1] > increments[k - 5] && inc > 1e3 * HODGE_TOL * scale {
            break;
        }
    }
    let last = increments.last().copied().unwrap_or(f64::NAN);
    if last <= 1e2 * HODGE_TOL * scale {
        return Ok((c.add(&TorusOneForm::exact(&u)), u));
    }
    let rates = increments.windows(2).map(|w| w[1] / w[0]).collect();
    Err(Error::NonContraction {
        detail: format!(
            "harmonic representative solve stalled at increment {last:e} (‖j − i‖∞ = {:.3})",
            j.distance_from_standard()
        ),
        rates,
    })
}

/// Largest Fourier coefficient of `P_N dγ` and of `P_N d(γ∘j)`.
pub fn harmonic_defects(gamma: &TorusOneForm, j: &StructureField) -> (f64, f64) {
    let n_modes = gamma.n_modes();
    let sup = |f: &TorusField| f.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
    let closed = sup(&gamma.d());
    let kind = gamma.kind;
    let coclosed = sup(&gamma.to_grid(j.m()).compose(j).to_form(n_modes, kind).d());
    (closed, coclosed)
}

/// Kernel and cokernel counts of the truncated normalized `∂̄`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FredholmReport {
    #[serde(rename = "N")]
    pub n_modes: usize,
    pub ker_dim: usize,
    pub coker_dim: usize,
    /// Rank of the harmonic (0,1)-forms modulo the range.
    pub harmonic_dim: usize,
    pub index: i64,
    /// Largest singular value in the zero cluster.
    pub zero_cluster_max: f64,
    /// Smallest singular value outside the zero cluster.
    pub gap: f64,
    /// The sixteen smallest singular values.
    pub smallest_singular_values: Vec<f64>,
}

/// Singular values below this count as zero.
pub const ZERO_SINGULAR_TOL: f64 = 1e-10;

/// Kernel, cokernel and index of `∂̄` on `|m|, |n| ≤ N`.
///
/// The operator is block diagonal over Fourier modes; each real 2×2 block is
/// assembled by applying [`TorusField::dbar`] to `e_{m,n}` and `i e_{m,n}`.
/// The cokernel is measured as the rank of `Ψ(ds), Ψ(dt)` after projecting
/// out the range, and must agree with the count from the singular values.
pub fn fredholm_index_report(n_modes: usize) -> Result<FredholmReport> {
    if n_modes < 4 {
        return Err(Error::Precondition(format!("N = {n_modes} must be at least 4")));
    }
    let nn = n_modes as i64;
    let mut sv = Vec::with_capacity(2 * (2 * n_modes + 1).pow(2));
    let mut range_has_zero_mode = false;
    for m in -nn..=nn {
        for n in -nn..=nn {
            let mut block = Matrix2::zeros();
            for (col, unit) in [Complex64::new(1.0, 0.0), I].into_iter().enumerate() {
                let e = TorusField::from_coeff_fn(n_modes, false, |a, b| {
                    if (a, b) == (m, n) {
                        unit
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                });
                let out = e.dbar().coeff(m, n);
                block[(0, col)] = out.re;
                block[(1, col)] = out.im;
            }
            let s = block.singular_values();
            if m == 0 && n == 0 && s.max() > ZERO_SINGULAR_TOL {
                range_has_zero_mode = true;
            }
            sv.extend(s.iter().copied());
        }
    }
    sv.sort_by(f64::total_cmp);
    let ker_dim = sv.iter().filter(|&&s| s <= ZERO_SINGULAR_TOL).count();
    let zero_cluster_max = sv[..ker_dim].last().copied().unwrap_or(0.0);
    let gap = sv.get(ker_dim).copied().unwrap_or(f64::INFINITY);
    let smallest: Vec<f64> = sv.iter().take(16).copied().collect();
    if ker_dim == 0 || gap < 1e3 * zero_cluster_max.max(ZERO_SINGULAR_TOL) {
        return Err(Error::Numeric(format!("no clear zero cluster; smallest singular values {smallest:?}")));
    }
    let rank = sv.len() - ker_dim;
    // Target: (0,1)-forms, determined by their ds-component.
    let coker_dim = sv.len() - rank;
    // Ψ(ds) and Ψ(dt) have ds-components 1 and i in the (0,0) mode, which the
    // range misses.
    let harmonic = Matrix2::new(1.0, 0.0, 0.0, 1.0);
    let harmonic_dim = if range_has_zero_mode { 0 } else { harmonic.rank(1e-12) };
    if coker_dim != harmonic_dim {
        return Err(Error::Numeric(format!(
            "cokernel count {coker_dim} disagrees with the harmonic complement {harmonic_dim}"
        )));
    }
    Ok(FredholmReport {
        n_modes,
        ker_dim,
        coker_dim,
        harmonic_dim,
        index: ker_dim as i64 - coker_dim as i64,
        zero_cluster_max,
        gap,
        smallest_singular_values: smallest,
    })
}

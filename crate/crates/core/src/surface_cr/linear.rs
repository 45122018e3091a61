//! The linearized CR operator at the trivial solution and the near-null space
//! of `T = ∂̄ + π₁L`.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::field::{collocation_size, TorusField};
use super::forms::{conjugate, standard_j, FormKind, GridForm, StructureField, TorusOneForm};
use super::hodge::{dbar_form, hodge_representative, psi_standard};
use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Step of the central difference in the structure parameter.
pub const B_TERM_STEP: f64 = 1e-5;

/// Pointwise data of the zero-order term: `j_f = P J₀ P⁻¹` with `P = I + f X`
/// to first order, so `∂j/∂f = [X, J₀]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FootnoteOp {
    pub n_modes: usize,
    /// Samples of `u₀*λ` on the collocation grid (real parts used).
    pub u0_lambda: GridForm,
    /// `X` at every node.
    pub x: Vec<Matrix2<f64>>,
    /// Base class `σ₀`.
    pub sigma0: [f64; 2],
}

/// Zero-order term of the linearization.
#[derive(Debug, Clone, PartialEq)]
pub enum ZeroOrderOp {
    Zero,
    Footnote(FootnoteOp),
}

impl FootnoteOp {
    /// Grid size.
    pub fn m(&self) -> usize {
        self.u0_lambda.m
    }

    /// `Lζ` with `k = Im ζ`, `Ȧ = k[X, J₀]`:
    /// `−½u₀*λ∘(Ȧ + J₀ȦJ₀) + (i/2)u₀*λ∘(J₀Ȧ − ȦJ₀) + Bζ + i(Bζ∘J₀)`,
    /// where `Bζ` is the derivative of `ψ_{P J₀ P⁻¹}(σ₀)` along
    /// `P = I + εkX`, by central differences with step [`B_TERM_STEP`].
    pub fn apply(&self, zeta: &TorusField) -> Result<TorusOneForm> {
        let m = self.m();
        if self.x.len() != m * m {
            return Err(Error::Precondition("X and u₀*λ live on different grids".into()));
        }
        let k = zeta.im().to_real_grid(m);
        let j0 = standard_j();
        let mut a_part = GridForm::zeros(m);
        for (idx, kv) in k.iter().enumerate() {
            let x = self.x[idx];
            let ad = (x * j0 - j0 * x) * *kv;
            let re = (ad + j0 * ad * j0) * -0.5;
            let im = (j0 * ad - ad * j0) * 0.5;
            let (u, v) = (self.u0_lambda.s[idx].re, self.u0_lambda.t[idx].re);
            a_part.s[idx] = Complex64::new(u * re[(0, 0)] + v * re[(1, 0)], u * im[(0, 0)] + v * im[(1, 0)]);
            a_part.t[idx] = Complex64::new(u * re[(0, 1)] + v * re[(1, 1)], u * im[(0, 1)] + v * im[(1, 1)]);
        }
        let mut out = a_part.to_form(self.n_modes, FormKind::Complex);
        if self.sigma0 != [0.0, 0.0] {
            let perturbed = |eps: f64| {
                let mats = (0..m * m)
                    .map(|idx| conjugate(&(Matrix2::identity() + self.x[idx] * (eps * k[idx]))))
                    .collect::<Result<Vec<_>>>()?;
                hodge_representative(self.sigma0, &StructureField::new(m, mats)?, self.n_modes)
            };
            let b =
                perturbed(B_TERM_STEP)?.sub(&perturbed(-B_TERM_STEP)?).scale(Complex64::new(0.5 / B_TERM_STEP, 0.0));
            out = out.add(&b.add(&b.compose_standard().scale(I)));
        }
        Ok(out)
    }
}

impl ZeroOrderOp {
    /// `Lζ`, zero for [`ZeroOrderOp::Zero`].
    pub fn apply(&self, zeta: &TorusField) -> Result<TorusOneForm> {
        match self {
            ZeroOrderOp::Zero => Ok(TorusOneForm::zeros(zeta.n_modes(), FormKind::Complex)),
            ZeroOrderOp::Footnote(op) => op.apply(zeta),
        }
    }
}

/// `(dζ + i dζ∘J₀) + ψ(σ) + i(ψ(σ)∘J₀) + Lζ`.
pub fn linearized_cr_apply(zeta: &TorusField, class: [f64; 2], op: &ZeroOrderOp) -> Result<TorusOneForm> {
    let n_modes = zeta.n_modes();
    Ok(dbar_form(zeta).add(&psi_standard(n_modes, class)).add(&op.apply(zeta)?))
}

/// A footnote operator with random smooth `X` and `u₀*λ` of the given
/// amplitude and random `σ₀`.
pub fn random_footnote_op(n_modes: usize, seed: u64, amplitude: f64) -> FootnoteOp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = collocation_size(n_modes);
    let mut trig = || {
        let (a, b, c, d) = (
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(0.0..6.3),
            rng.random_range(0.0..6.3),
        );
        move |s: f64, t: f64| a * (s + c).cos() + b * (t - d).sin()
    };
    let (x00, x01, x10, x11, us, ut) = (trig(), trig(), trig(), trig(), trig(), trig());
    let x = (0..m * m)
        .map(|k| {
            let (s, t) = super::field::node(m, k);
            Matrix2::new(x00(s, t), x01(s, t), x10(s, t), x11(s, t)) * amplitude
        })
        .collect();
    let u0_lambda = GridForm::from_fn(m, |s, t| (amplitude * us(s, t), amplitude * ut(s, t)));
    let sigma0 = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
    FootnoteOp { n_modes, u0_lambda, x, sigma0 }
}

/// Singular-value picture of `T = ∂̄ + π₁L`, `π₁` removing the harmonic
/// (constant) part of the output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullityReport {
    #[serde(rename = "N")]
    pub n_modes: usize,
    pub nullity: usize,
    /// Largest near-zero singular value (zero when the count comes from
    /// the column excess alone).
    pub zero_cluster_max: f64,
    /// Smallest singular value outside the zero cluster.
    pub gap: f64,
    /// Spectral norm of `π₁L` on the truncated basis.
    pub l_norm: f64,
}

/// Near-zero singular values of `T`, counted with the column excess.
pub const NULL_TOL: f64 = 1e-8;

/// Assemble `T` column by column on the basis `e_{m,n}`, `i e_{m,n}` and
/// count its near-null space. Rows are the real and imaginary parts of the
/// non-constant modes of the `ds`-component, which determines a (0,1)-form.
pub fn t_operator_nullity(n_modes: usize, op: &ZeroOrderOp) -> Result<NullityReport> {
    let nn = n_modes as i64;
    let w = 2 * n_modes + 1;
    let modes: Vec<(i64, i64)> = (-nn..=nn).flat_map(|m| (-nn..=nn).map(move |n| (m, n))).collect();
    let rows: Vec<(i64, i64)> = modes.iter().copied().filter(|&p| p != (0, 0)).collect();
    let cols: Vec<Result<(Vec<f64>, Vec<f64>)>> = (0..2 * w * w)
        .into_par_iter()
        .map(|c| {
            let (m, n) = modes[c / 2];
            let unit = if c % 2 == 0 { Complex64::new(1.0, 0.0) } else { I };
            let e = TorusField::from_coeff_fn(n_modes, false, |a, b| {
                if (a, b) == (m, n) {
                    unit
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            let d = dbar_form(&e).ds;
            let l = op.apply(&e)?.ds;
            let flat = |f: &TorusField| rows.iter().flat_map(|&(a, b)| [f.coeff(a, b).re, f.coeff(a, b).im]).collect();
            Ok((flat(&d.add(&l)), flat(&l)))
        })
        .collect();
    let n_rows = 2 * rows.len();
    let mut t = DMatrix::zeros(n_rows, 2 * w * w);
    let mut lm = DMatrix::zeros(n_rows, 2 * w * w);
    for (c, col) in cols.into_iter().enumerate() {
        let (tc, lc) = col?;
        t.set_column(c, &nalgebra::DVector::from_vec(tc));
        lm.set_column(c, &nalgebra::DVector::from_vec(lc));
    }
    let l_norm = lm.singular_values().max();
    let mut sv: Vec<f64> = t.singular_values().iter().copied().collect();
    sv.sort_by(f64::total_cmp);
    let small = sv.iter().filter(|&&s| s <= NULL_TOL).count();
    let zero_cluster_max = sv[..small].last().copied().unwrap_or(0.0);
    let gap = sv.get(small).copied().unwrap_or(f64::INFINITY);
    if gap < 1e3 * zero_cluster_max.max(NULL_TOL) {
        return Err(Error::Numeric(format!(
            "no clear zero cluster in T; smallest singular values {:?}",
            &sv[..sv.len().min(16)]
        )));
    }
    Ok(NullityReport { n_modes, nullity: 2 * w * w - (sv.len() - small), zero_cluster_max, gap, l_norm })
}

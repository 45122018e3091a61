//! Newton's method for the model perturbed CR equation
//! `(dζ + i dζ∘j_f) − u₀*λ∘j_f + i u₀*λ + (da₀ + i da₀∘j_f) + (γ + i γ∘j_f) = 0`
//! with `ζ = b + if`, `γ = ψ_{j_f}(σ)`, pseudo-spectrally on the torus.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::field::{collocation_size, TorusField};
use super::forms::{conjugate, standard_j, GridForm, StructureField, TorusOneForm};
use super::hodge::{harmonic_defects, hodge_solve};
use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// How the almost complex structure depends on the value of `f`.
pub trait JDependence: Sync {
    /// Collocation grid size.
    fn grid_size(&self) -> usize;

    /// `j` at node `k` when `f = value` there.
    fn structure(&self, k: usize, value: f64) -> Matrix2<f64>;

    /// `j_f` on the whole grid.
    fn structure_field(&self, f: &[f64]) -> Result<StructureField> {
        let m = self.grid_size();
        StructureField::new(m, (0..m * m).map(|k| self.structure(k, f[k])).collect())
    }
}

/// `j = i` for every `f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandardJ {
    pub m: usize,
}

impl JDependence for StandardJ {
    fn grid_size(&self) -> usize {
        self.m
    }

    fn structure(&self, _: usize, _: f64) -> Matrix2<f64> {
        standard_j()
    }
}

/// `j_f = P J₀ P⁻¹` with `P = I + f X(node)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugatedJ {
    pub m: usize,
    pub x: Vec<Matrix2<f64>>,
}

impl JDependence for ConjugatedJ {
    fn grid_size(&self) -> usize {
        self.m
    }

    fn structure(&self, k: usize, value: f64) -> Matrix2<f64> {
        let p = Matrix2::identity() + self.x[k] * value;
        conjugate(&p).unwrap_or(Matrix2::from_element(f64::NAN))
    }
}

/// The family `(−x, −1; 1 + x², x)` with `x = f · c(node)`, the leaf's
/// `j_τ` with `τ` replaced by `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct AppendixJ {
    pub m: usize,
    pub c: Vec<f64>,
}

impl JDependence for AppendixJ {
    fn grid_size(&self) -> usize {
        self.m
    }

    fn structure(&self, k: usize, value: f64) -> Matrix2<f64> {
        let x = value * self.c[k];
        Matrix2::new(-x, -1.0, 1.0 + x * x, x)
    }
}

/// Right-hand-side data sampled on the collocation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CrData {
    pub n_modes: usize,
    /// `u₀*λ` (real).
    pub u0_lambda: GridForm,
    /// `da₀` (real), supplied as a one-form.
    pub da0: GridForm,
}

impl CrData {
    /// All data zero.
    pub fn zeros(n_modes: usize, m: usize) -> Self {
        Self { n_modes, u0_lambda: GridForm::zeros(m), da0: GridForm::zeros(m) }
    }
}

/// Starting point or solution of the unknowns `(b + if, σ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrGuess {
    pub bf: TorusField,
    pub sigma: [f64; 2],
}

/// Newton settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NewtonOptions {
    /// Target for the coefficient norm of the projected residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Pinned mean of `f`; `None` keeps the mean of the start.
    pub f_mean: Option<f64>,
    /// Central-difference step of the Jacobian.
    pub fd_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 12, f_mean: None, fd_step: 1e-6 }
    }
}

/// Residual bookkeeping of a solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    /// Coefficient norm of the projected residual.
    pub residual: f64,
    /// Largest residual modulus on the collocation grid.
    pub grid_residual: f64,
    /// Largest coefficient of `dγ`.
    pub closed_defect: f64,
    /// Largest coefficient of `d(γ∘j_f)`.
    pub coclosed_defect: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
    pub convergence_exponent: Option<f64>,
    pub sigma: [f64; 2],
    pub f_mean: f64,
    pub tol: f64,
}

/// A solved instance.
#[derive(Debug, Clone, PartialEq)]
pub struct CRSolution {
    pub bf: TorusField,
    pub sigma: [f64; 2],
    pub gamma: TorusOneForm,
    pub j_field: StructureField,
    pub report: ResidualReport,
}

impl CRSolution {
    /// `f = Im(b + if)`.
    pub fn f(&self) -> TorusField {
        self.bf.im()
    }

    pub fn guess(&self) -> CrGuess {
        CrGuess { bf: self.bf.clone(), sigma: self.sigma }
    }

    /// Write `bf.tfield`, `gamma_ds.tfield`, `gamma_dt.tfield` and
    /// `report.json` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.bf.write_to(BufWriter::new(File::create(dir.join("bf.tfield"))?))?;
        self.gamma.ds.write_to(BufWriter::new(File::create(dir.join("gamma_ds.tfield"))?))?;
        self.gamma.dt.write_to(BufWriter::new(File::create(dir.join("gamma_dt.tfield"))?))?;
        serde_json::to_writer_pretty(BufWriter::new(File::create(dir.join("report.json"))?), &self.report)?;
        Ok(())
    }
}

/// Modes `m > 0` or `m = 0, n > 0`: one of each conjugate pair.
fn half_modes(n_modes: usize) -> Vec<(i64, i64)> {
    let nn = n_modes as i64;
    (-nn..=nn).flat_map(|m| (-nn..=nn).map(move |n| (m, n))).filter(|&(m, n)| m > 0 || (m == 0 && n > 0)).collect()
}

struct Problem<'a, J: JDependence + ?Sized> {
    data: &'a CrData,
    jdep: &'a J,
    half: Vec<(i64, i64)>,
    f_mean: f64,
}

struct Eval {
    coeffs: TorusField,
    grid_sup: f64,
    gamma: TorusOneForm,
    potential: TorusField,
    j: StructureField,
}

impl<J: JDependence + ?Sized> Problem<'_, J> {
    fn n_modes(&self) -> usize {
        self.data.n_modes
    }

    fn unpack(&self, x: &[f64]) -> CrGuess {
        let h = self.half.len();
        let bf = TorusField::from_coeff_fn(self.n_modes(), false, |m, n| {
            if m == 0 && n == 0 {
                return Complex64::new(0.0, self.f_mean);
            }
            let (i, conj) = match self.half.binary_search(&(m, n)) {
                Ok(i) => (i, false),
                Err(_) => (self.half.binary_search(&(-m, -n)).expect("half-mode index"), true),
            };
            let b = Complex64::new(x[2 * i], x[2 * i + 1]);
            let f = Complex64::new(x[2 * h + 2 * i], x[2 * h + 2 * i + 1]);
            if conj {
                b.conj() + I * f.conj()
            } else {
                b + I * f
            }
        });
        CrGuess { bf, sigma: [x[4 * h], x[4 * h + 1]] }
    }

    fn pack(&self, g: &CrGuess) -> Vec<f64> {
        let h = self.half.len();
        let (b, f) = (g.bf.re(), g.bf.im());
        let mut x = vec![0.0; 4 * h + 2];
        for (i, &(m, n)) in self.half.iter().enumerate() {
            x[2 * i] = b.coeff(m, n).re;
            x[2 * i + 1] = b.coeff(m, n).im;
            x[2 * h + 2 * i] = f.coeff(m, n).re;
            x[2 * h + 2 * i + 1] = f.coeff(m, n).im;
        }
        x[4 * h] = g.sigma[0];
        x[4 * h + 1] = g.sigma[1];
        x
    }

    fn eval(&self, x: &[f64], warm: Option<&TorusField>) -> Result<Eval> {
        let g = self.unpack(x);
        let m = self.jdep.grid_size();
        let n_modes = self.n_modes();
        let f = g.bf.im().to_real_grid(m);
        let j = self.jdep.structure_field(&f)?;
        let (gamma, potential) = hodge_solve(g.sigma, &j, n_modes, warm)?;
        let gg = gamma.to_grid(m);
        let dzeta = GridForm { m, s: g.bf.d_s().to_grid(m), t: g.bf.d_t().to_grid(m) };
        let one = Complex64::new(1.0, 0.0);
        let q = dzeta.axpy(one, &self.data.da0).axpy(one, &gg);
        let r = q.axpy(I, &q.compose(&j)).axpy(-one, &self.data.u0_lambda.compose(&j)).axpy(I, &self.data.u0_lambda);
        let grid_sup = r.s.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let coeffs = TorusField::from_grid(n_modes, m, &r.s, false);
        Ok(Eval { coeffs, grid_sup, gamma, potential, j })
    }
}

fn flatten(f: &TorusField) -> DVector<f64> {
    DVector::from_iterator(2 * f.coeffs().len(), f.coeffs().iter().flat_map(|c| [c.re, c.im]))
}

/// Log-log slope of `r_{k+1}` against `r_k` over consecutive pairs above
/// `1e-12`; `None` with fewer than two such pairs.
pub fn convergence_exponent(history: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        history.windows(2).filter(|w| w[0] > 1e-12 && w[1] > 1e-12).map(|w| (w[0].ln(), w[1].ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Solve the model equation from `init`.
///
/// Unknowns are the real and imaginary parts of `b` and `f` over one mode of
/// each conjugate pair plus `σ ∈ ℝ²`; `mean(b) = 0` and `mean(f)` is pinned,
/// which removes the two-dimensional kernel and leaves a square system.
/// Equations are the modes `|m|, |n| ≤ N` of the `ds`-component of the
/// residual, which determines the (0,1)-form. Each step solves the
/// central-difference Jacobian by LU.
pub fn newton_solve_model<J: JDependence + ?Sized>(
    data: &CrData,
    jdep: &J,
    init: &CrGuess,
    opts: &NewtonOptions,
) -> Result<CRSolution> {
    let n_modes = data.n_modes;
    let m = jdep.grid_size();
    if data.u0_lambda.m != m || data.da0.m != m {
        return Err(Error::Precondition("data and structure live on different grids".into()));
    }
    if m < 2 * n_modes + 2 {
        return Err(Error::Precondition(format!("grid {m} too coarse for N = {n_modes}")));
    }
    if !(opts.tol > 0.0) || !(opts.fd_step > 0.0) {
        return Err(Error::Precondition("tolerance and step must be positive".into()));
    }
    let problem = Problem {
        data,
        jdep,
        half: half_modes(n_modes),
        f_mean: opts.f_mean.unwrap_or(init.bf.resize(n_modes).im().mean().re),
    };
    let mut x = problem.pack(&CrGuess { bf: init.bf.resize(n_modes), sigma: init.sigma });
    let mut ev = problem.eval(&x, None)?;
    let mut history = vec![ev.coeffs.coeff_norm()];
    let mut rises = 0;
    let mut iterations = 0;
    while *history.last().expect("nonempty") > opts.tol {
        if iterations == opts.max_iter {
            return Err(Error::Divergence(format!(
                "no convergence in {} iterations; residuals {history:?}",
                opts.max_iter
            )));
        }
        let e = opts.fd_step;
        let warm = &ev.potential;
        let cols: Vec<Result<DVector<f64>>> = (0..x.len())
            .into_par_iter()
            .map(|c| {
                let mut xp = x.clone();
                xp[c] += e;
                let fp = flatten(&problem.eval(&xp, Some(warm))?.coeffs);
                xp[c] -= 2.0 * e;
                let fm = flatten(&problem.eval(&xp, Some(warm))?.coeffs);
                Ok((fp - fm) / (2.0 * e))
            })
            .collect();
        let mut jac = DMatrix::zeros(x.len(), x.len());
        for (c, col) in cols.into_iter().enumerate() {
            jac.set_column(c, &col?);
        }
        let lu = jac.lu();
        let diag = lu.u().diagonal().abs();
        let (lo, hi) = (diag.min(), diag.max());
        if !(lo > 1e-13 * hi) {
            return Err(Error::RankDeficient(format!(
                "Jacobian pivot ratio {:e} beyond the gauge-fixed kernel",
                lo / hi
            )));
        }
        let rhs = flatten(&ev.coeffs);
        let delta = lu.solve(&rhs).ok_or_else(|| Error::RankDeficient("singular Jacobian".into()))?;
        for (xi, d) in x.iter_mut().zip(delta.iter()) {
            *xi -= d;
        }
        let prev = *history.last().expect("nonempty");
        ev = problem.eval(&x, Some(&ev.potential))?;
        let r = ev.coeffs.coeff_norm();
        history.push(r);
        iterations += 1;
        rises = if r > prev { rises + 1 } else { 0 };
        if rises >= 3 || !r.is_finite() {
            return Err(Error::Divergence(format!("residual increased over 3 steps: {history:?}")));
        }
    }
    let g = problem.unpack(&x);
    let (closed_defect, coclosed_defect) = harmonic_defects(&ev.gamma, &ev.j);
    let report = ResidualReport {
        residual: *history.last().expect("nonempty"),
        grid_residual: ev.grid_sup,
        closed_defect,
        coclosed_defect,
        iterations,
        convergence_exponent: convergence_exponent(&history),
        history,
        sigma: g.sigma,
        f_mean: problem.f_mean,
        tol: opts.tol,
    };
    Ok(CRSolution { bf: g.bf, sigma: g.sigma, gamma: ev.gamma, j_field: ev.j, report })
}

/// A problem with known solution: `u₀*λ` is defined from chosen `f*, b*, a₀,
/// σ*` so that the equation holds exactly on the collocation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedProblem {
    pub data: CrData,
    pub jdep: ConjugatedJ,
    pub exact: CrGuess,
    pub a0: TorusField,
}

/// Random real trigonometric polynomial with coefficients bounded by
/// `amplitude · e^{−decay |(m, n)|}`.
pub(crate) fn random_trig(n_modes: usize, rng: &mut ChaCha8Rng, amplitude: f64, decay: f64) -> TorusField {
    let nn = n_modes as i64;
    let w = 2 * n_modes + 1;
    let coeffs: Vec<Complex64> = (0..w * w)
        .map(|k| {
            let (m, n) = ((k / w) as i64 - nn, (k % w) as i64 - nn);
            let r = amplitude * (-decay * ((m * m + n * n) as f64).sqrt()).exp();
            Complex64::new(rng.random_range(-r..=r), rng.random_range(-r..=r))
        })
        .collect();
    TorusField::from_coeff_fn(n_modes, true, |m, n| coeffs[((m + nn) * w as i64 + (n + nn)) as usize])
}

/// `sup |f*|` of manufactured problems.
pub const MANUFACTURED_F_SUP: f64 = 0.5;

/// Largest entry of `X` in manufactured problems.
pub const MANUFACTURED_X_SUP: f64 = 0.1;

/// Random manufactured problem on `N` modes from `seed`: `sup |f*|` and the
/// entries of `X` are normalized so that `‖f* X‖∞` stays near `0.05`.
pub fn manufactured_problem(seed: u64, n_modes: usize) -> Result<ManufacturedProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = collocation_size(n_modes);
    let unit_sup = |t: TorusField, size: f64| {
        let sup = t.sup_norm(m).max(f64::MIN_POSITIVE);
        t.scale(Complex64::new(size / sup, 0.0))
    };
    let f = unit_sup(random_trig(n_modes, &mut rng, 1.0, 0.6), MANUFACTURED_F_SUP);
    let b = {
        let b = random_trig(n_modes, &mut rng, 0.3, 0.6);
        b.sub(&TorusField::constant(n_modes, b.mean()))
    };
    let a0 = random_trig(n_modes, &mut rng, 0.3, 0.6);
    let sigma = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
    let xg: Vec<Vec<f64>> =
        (0..4).map(|_| unit_sup(random_trig(2, &mut rng, 1.0, 0.3), MANUFACTURED_X_SUP).to_real_grid(m)).collect();
    let jdep = ConjugatedJ { m, x: (0..m * m).map(|k| Matrix2::new(xg[0][k], xg[1][k], xg[2][k], xg[3][k])).collect() };
    let bf = b.add(&f.scale(I));
    let j = jdep.structure_field(&f.to_real_grid(m))?;
    let (gamma, _) = hodge_solve(sigma, &j, n_modes, None)?;
    let da0 = TorusOneForm::exact(&a0).to_grid(m);
    let p = TorusOneForm::exact(&b)
        .to_grid(m)
        .axpy(Complex64::new(1.0, 0.0), &da0)
        .axpy(Complex64::new(1.0, 0.0), &gamma.to_grid(m));
    let df = TorusOneForm::exact(&f).to_grid(m);
    let u0_lambda = p.compose(&j).axpy(Complex64::new(1.0, 0.0), &df);
    let u0_lambda = GridForm::zeros(m).axpy(Complex64::new(-1.0, 0.0), &u0_lambda);
    Ok(ManufacturedProblem { data: CrData { n_modes, u0_lambda, da0 }, jdep, exact: CrGuess { bf, sigma }, a0 })
}

/// `exact` displaced by random mean-zero smooth fields in `b` and `f` and a
/// random shift of `σ`, each of norm `eps`.
pub fn perturbed_start(exact: &CrGuess, seed: u64, eps: f64) -> CrGuess {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_modes = exact.bf.n_modes();
    let mut unit = || {
        let t = random_trig(n_modes, &mut rng, 1.0, 0.5);
        let t = t.sub(&TorusField::constant(n_modes, t.mean()));
        t.scale(Complex64::new(eps / t.coeff_norm().max(f64::MIN_POSITIVE), 0.0))
    };
    let (db, df) = (unit(), unit());
    let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    CrGuess {
        bf: exact.bf.add(&db).add(&df.scale(I)),
        sigma: [exact.sigma[0] + eps * a.cos(), exact.sigma[1] + eps * a.sin()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pack_unpack_round_trip() {
        let data = CrData::zeros(2, collocation_size(2));
        let jdep = StandardJ { m: collocation_size(2) };
        let p = Problem { data: &data, jdep: &jdep, half: half_modes(2), f_mean: 0.25 };
        let x: Vec<f64> = (0..p.half.len() * 4 + 2).map(|k| (k as f64 * 0.37).sin()).collect();
        let g = p.unpack(&x);
        assert_eq!(g.bf.im().mean().re, 0.25);
        assert_eq!(g.bf.re().mean().re, 0.0);
        assert!(p.pack(&g).iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn exponent_of_quadratic_sequence() {
        let h = [1e-1, 1e-2, 1e-4, 1e-8, 1e-15];
        assert!((convergence_exponent(&h).unwrap() - 2.0).abs() < 0.2);
    }
}

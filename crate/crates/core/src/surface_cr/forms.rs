//! One-forms and almost complex structures on the flat torus.
//!
//! A one-form `σ = σ_s ds + σ_t dt` acts on tangent vectors as the row vector
//! `(σ_s, σ_t)`; a structure `j` is a per-node 2×2 matrix in the `(∂s, ∂t)`
//! basis and `σ∘j` is the row vector `(σ_s, σ_t) · j`.

use std::f64::consts::TAU;

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::{node, TorusField};
use crate::error::{Error, Result};

/// Tolerance on `j² = −I` at every node.
pub const STRUCTURE_TOL: f64 = 1e-10;

/// The standard structure `j ∂s = ∂t`.
pub fn standard_j() -> Matrix2<f64> {
    Matrix2::new(0.0, -1.0, 1.0, 0.0)
}

/// Real-valued forms versus complex (0,1)-data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormKind {
    Real,
    Complex,
}

/// A one-form with Fourier-series components.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusOneForm {
    pub ds: TorusField,
    pub dt: TorusField,
    pub kind: FormKind,
}

impl TorusOneForm {
    /// Form from components; the kind is real iff both are.
    pub fn new(ds: TorusField, dt: TorusField) -> Self {
        let kind = if ds.is_real() && dt.is_real() { FormKind::Real } else { FormKind::Complex };
        Self { ds, dt, kind }
    }

    /// Constant form `c₁ ds + c₂ dt`.
    pub fn constant(n_modes: usize, c: [f64; 2]) -> Self {
        Self::new(
            TorusField::constant(n_modes, Complex64::new(c[0], 0.0)),
            TorusField::constant(n_modes, Complex64::new(c[1], 0.0)),
        )
    }

    /// The zero form.
    pub fn zeros(n_modes: usize, kind: FormKind) -> Self {
        let real = kind == FormKind::Real;
        Self { ds: TorusField::zeros(n_modes, real), dt: TorusField::zeros(n_modes, real), kind }
    }

    /// `df`.
    pub fn exact(f: &TorusField) -> Self {
        Self::new(f.d_s(), f.d_t())
    }

    pub fn n_modes(&self) -> usize {
        self.ds.n_modes().max(self.dt.n_modes())
    }

    /// Exterior derivative `∂s σ_t − ∂t σ_s` (coefficient of `ds ∧ dt`).
    pub fn d(&self) -> TorusField {
        self.dt.d_s().sub(&self.ds.d_t())
    }

    /// `σ∘j` for the standard structure: `(σ_t, −σ_s)`.
    pub fn compose_standard(&self) -> Self {
        Self::new(self.dt.clone(), self.ds.scale(Complex64::new(-1.0, 0.0)))
    }

    /// `self + other`.
    pub fn add(&self, other: &TorusOneForm) -> Self {
        Self::new(self.ds.add(&other.ds), self.dt.add(&other.dt))
    }

    /// `self − other`.
    pub fn sub(&self, other: &TorusOneForm) -> Self {
        Self::new(self.ds.sub(&other.ds), self.dt.sub(&other.dt))
    }

    /// `c · self`.
    pub fn scale(&self, c: Complex64) -> Self {
        Self::new(self.ds.scale(c), self.dt.scale(c))
    }

    /// De Rham class as periods over the two fundamental cycles divided by
    /// `2π`: the mean components.
    pub fn class_vector(&self) -> [f64; 2] {
        [self.ds.mean().re, self.dt.mean().re]
    }

    /// Periods `∮ σ` along `t = 0` and `s = 0` by trapezoid quadrature on
    /// `m` points, real parts.
    pub fn line_periods(&self, m: usize) -> [f64; 2] {
        let h = TAU / m as f64;
        let mut p = [0.0; 2];
        for i in 0..m {
            let x = i as f64 * h;
            p[0] += self.ds.eval(x, 0.0).re * h;
            p[1] += self.dt.eval(0.0, x).re * h;
        }
        p
    }

    /// Samples on the `m × m` grid.
    pub fn to_grid(&self, m: usize) -> GridForm {
        GridForm { m, s: self.ds.to_grid(m), t: self.dt.to_grid(m) }
    }

    /// Combined coefficient norm of the two components.
    pub fn coeff_norm(&self) -> f64 {
        self.ds.coeff_norm().hypot(self.dt.coeff_norm())
    }
}

/// A one-form sampled on the `m × m` collocation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridForm {
    pub m: usize,
    pub s: Vec<Complex64>,
    pub t: Vec<Complex64>,
}

impl GridForm {
    /// The zero form.
    pub fn zeros(m: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); m * m];
        Self { m, s: z.clone(), t: z }
    }

    /// Samples of `(σ_s(s, t), σ_t(s, t))`.
    pub fn from_fn(m: usize, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let (s, t) = (0..m * m)
            .map(|k| {
                let (a, b) = node(m, k);
                let (u, v) = f(a, b);
                (Complex64::new(u, 0.0), Complex64::new(v, 0.0))
            })
            .unzip();
        Self { m, s, t }
    }

    /// `σ∘j` node by node.
    pub fn compose(&self, j: &StructureField) -> Self {
        assert_eq!(j.m(), self.m);
        let (s, t) = (0..self.m * self.m)
            .map(|k| {
                let a = j.at(k);
                let (u, v) = (self.s[k], self.t[k]);
                (u * a[(0, 0)] + v * a[(1, 0)], u * a[(0, 1)] + v * a[(1, 1)])
            })
            .unzip();
        Self { m: self.m, s, t }
    }

    /// `self + c · other`.
    pub fn axpy(&self, c: Complex64, other: &GridForm) -> Self {
        assert_eq!(self.m, other.m);
        let zip = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).map(|(x, y)| x + c * y).collect();
        Self { m: self.m, s: zip(&self.s, &other.s), t: zip(&self.t, &other.t) }
    }

    /// Truncated Fourier form with `n_modes` modes.
    pub fn to_form(&self, n_modes: usize, kind: FormKind) -> TorusOneForm {
        let real = kind == FormKind::Real;
        TorusOneForm {
            ds: TorusField::from_grid(n_modes, self.m, &self.s, real),
            dt: TorusField::from_grid(n_modes, self.m, &self.t, real),
            kind,
        }
    }

    /// `∫ (σ∘j) ∧ σ` by the trapezoid rule, real parts, with
    /// `(α ∧ β)(∂s, ∂t) = α_s β_t − α_t β_s`.
    pub fn j_energy(&self, j: &StructureField) -> f64 {
        let sj = self.compose(j);
        let h = TAU / self.m as f64;
        (0..self.m * self.m).map(|k| sj.s[k].re * self.t[k].re - sj.t[k].re * self.s[k].re).sum::<f64>() * h * h
    }
}

/// Almost complex structure sampled on the collocation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureField {
    m: usize,
    mats: Vec<Matrix2<f64>>,
}

impl StructureField {
    /// Check `j² = −I` and the orientation `j₁₀ > 0` (so `(∂s, j∂s)` is
    /// positive) at every node.
    pub fn new(m: usize, mats: Vec<Matrix2<f64>>) -> Result<Self> {
        if mats.len() != m * m {
            return Err(Error::Precondition(format!("{} structure samples for grid {m}", mats.len())));
        }
        for (k, a) in mats.iter().enumerate() {
            let sq = a * a + Matrix2::identity();
            if !(sq.amax() <= STRUCTURE_TOL * (1.0 + a.amax() * a.amax())) {
                return Err(Error::Precondition(format!("j² ≠ −I at node {k} (defect {:e})", sq.amax())));
            }
            if !(a[(1, 0)] > 0.0) {
                return Err(Error::Precondition(format!("j has the wrong orientation at node {k}")));
            }
        }
        Ok(Self { m, mats })
    }

    /// `j = i` everywhere.
    pub fn standard(m: usize) -> Self {
        Self { m, mats: vec![standard_j(); m * m] }
    }

    /// `j = P J₀ P⁻¹` with `P(s, t)` invertible.
    pub fn conjugated(m: usize, p: impl Fn(f64, f64) -> Matrix2<f64>) -> Result<Self> {
        let mats = (0..m * m)
            .map(|k| {
                let (s, t) = node(m, k);
                conjugate(&p(s, t))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(m, mats)
    }

    /// Grid size.
    pub fn m(&self) -> usize {
        self.m
    }

    /// `j` at node `k`.
    pub fn at(&self, k: usize) -> Matrix2<f64> {
        self.mats[k]
    }

    pub fn matrices(&self) -> &[Matrix2<f64>] {
        &self.mats
    }

    /// `‖j − J₀‖∞` as the largest entry modulus.
    pub fn distance_from_standard(&self) -> f64 {
        self.mats.iter().map(|a| (a - standard_j()).amax()).fold(0.0, f64::max)
    }
}

/// `P J₀ P⁻¹`.
pub fn conjugate(p: &Matrix2<f64>) -> Result<Matrix2<f64>> {
    let inv = p.try_inverse().ok_or_else(|| Error::Precondition("conjugating matrix is singular".into()))?;
    Ok(p * standard_j() * inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_composition_rotates() {
        let f = TorusOneForm::constant(2, [1.0, 2.0]);
        let g = f.compose_standard();
        assert_eq!(g.class_vector(), [2.0, -1.0]);
        let grid = f.to_grid(6).compose(&StructureField::standard(6));
        assert!((grid.s[3] - 2.0).norm() < 1e-14 && (grid.t[3] + 1.0).norm() < 1e-14);
    }

    #[test]
    fn structure_validation() {
        assert!(StructureField::new(1, vec![Matrix2::identity()]).is_err());
        assert!(StructureField::new(1, vec![-standard_j()]).is_err());
        let p = Matrix2::new(1.0, 0.1, 0.0, 1.0);
        let j = StructureField::conjugated(4, |_, _| p).unwrap();
        assert!(j.distance_from_standard() > 0.05);
    }

    #[test]
    fn energy_of_constant_form() {
        // ∫ (ds∘i) ∧ ds = ∫ (−dt) ∧ ds = 4π².
        let g = TorusOneForm::constant(1, [1.0, 0.0]).to_grid(4);
        assert!((g.j_energy(&StructureField::standard(4)) - TAU * TAU).abs() < 1e-12);
    }
}

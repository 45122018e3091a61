//! A-priori checks on solutions and families: the `L²` bound on `γ`,
//! monotonicity and the `L∞` bound of `f_τ`, and the interior gradient bound
//! for harmonic functions.

use std::f64::consts::{PI, TAU};

use serde::Serialize;

use super::field::{collocation_size, node, TorusField};
use super::forms::GridForm;
use super::newton::CRSolution;

/// Slack on the `L²` comparison.
pub const L2_SLACK: f64 = 1e-8;

/// Outcome of [`l2_bound_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct L2BoundReport {
    pub gamma_norm: f64,
    pub rhs_norm: f64,
    pub satisfied: bool,
}

/// `‖γ‖ ≤ ‖u₀*λ‖ + 10⁻⁸` with `‖σ‖² = ∫ (σ∘j_f) ∧ σ` by trapezoid quadrature
/// on the solution's collocation grid.
pub fn l2_bound_check(solution: &CRSolution, u0_lambda: &GridForm) -> L2BoundReport {
    let j = &solution.j_field;
    assert_eq!(u0_lambda.m, j.m(), "u₀*λ and the solution live on different grids");
    let gamma_norm = solution.gamma.to_grid(j.m()).j_energy(j).max(0.0).sqrt();
    let rhs_norm = u0_lambda.j_energy(j).max(0.0).sqrt();
    L2BoundReport { gamma_norm, rhs_norm, satisfied: gamma_norm <= rhs_norm + L2_SLACK }
}

/// Outcome of [`family_monotonicity_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyReport {
    pub members: usize,
    /// `f_{k+1} > f_k` at every node for every consecutive pair.
    pub monotone: bool,
    /// Smallest `f_{k+1} − f_k` over nodes and pairs.
    pub min_increment: f64,
    /// Pair index `k` attaining it.
    pub worst_pair: Option<usize>,
    /// `sup_k ‖f_k‖∞`.
    pub sup_norm: f64,
    pub t_return: f64,
    pub bound_satisfied: bool,
    /// `T − sup_k ‖f_k‖∞`.
    pub bound_margin: f64,
}

/// Pointwise strict monotonicity and the sup bound over a family ordered by
/// `τ`, sampled on the collocation grid of the largest truncation.
pub fn family_monotonicity_check(family: &[TorusField], t_return: f64) -> FamilyReport {
    let n_modes = family.iter().map(|f| f.n_modes()).max().unwrap_or(0);
    let m = collocation_size(n_modes);
    let samples: Vec<Vec<f64>> = family.iter().map(|f| f.to_real_grid(m)).collect();
    let mut min_increment = f64::INFINITY;
    let mut worst_pair = None;
    for (k, w) in samples.windows(2).enumerate() {
        let inc = w[0].iter().zip(&w[1]).map(|(a, b)| b - a).fold(f64::INFINITY, f64::min);
        if inc < min_increment {
            min_increment = inc;
            worst_pair = Some(k);
        }
    }
    let sup_norm = samples.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
    FamilyReport {
        members: family.len(),
        monotone: min_increment > 0.0,
        min_increment,
        worst_pair,
        sup_norm,
        t_return,
        bound_satisfied: sup_norm <= t_return,
        bound_margin: t_return - sup_norm,
    }
}

/// Outcome of [`gradient_bound_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradientBoundReport {
    /// `sup |∇h|` on the inner disk.
    pub grad_sup: f64,
    /// `sup |h|` on the outer disk.
    pub h_sup: f64,
    pub delta: f64,
    /// `(2/δ) sup |h|`.
    pub bound: f64,
    pub satisfied: bool,
}

/// Sample points per unit length used by [`gradient_bound_check`].
const GRADIENT_SAMPLES_PER_UNIT: f64 = 24.0;

/// `‖∇h‖_{C⁰(B')} ≤ (2/δ)‖h‖_{C⁰(B)}` for the real part of `h`, with `B` and
/// `B' ⊂ B` concentric disks of radii `outer` and `inner`, `δ = outer −
/// inner`, in the periodic chart around `center`.
pub fn gradient_bound_check(h: &TorusField, center: (f64, f64), outer: f64, inner: f64) -> GradientBoundReport {
    assert!(inner > 0.0 && outer > inner && outer < PI, "need 0 < inner < outer < π");
    let (hs, ht) = (h.d_s(), h.d_t());
    let m = collocation_size(h.n_modes()).max((TAU * GRADIENT_SAMPLES_PER_UNIT).ceil() as usize);
    let (v, vs, vt) = (h.to_real_grid(m), hs.to_real_grid(m), ht.to_real_grid(m));
    let wrap = |x: f64| (x + PI).rem_euclid(TAU) - PI;
    let (mut grad_sup, mut h_sup) = (0.0f64, 0.0f64);
    for k in 0..m * m {
        let (s, t) = node(m, k);
        let r = wrap(s - center.0).hypot(wrap(t - center.1));
        if r <= outer {
            h_sup = h_sup.max(v[k].abs());
        }
        if r <= inner {
            grad_sup = grad_sup.max(vs[k].hypot(vt[k]));
        }
    }
    let delta = outer - inner;
    let bound = 2.0 / delta * h_sup;
    GradientBoundReport { grad_sup, h_sup, delta, bound, satisfied: grad_sup <= bound }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructed_family_passes_and_fails() {
        let fam: Vec<TorusField> =
            (1..=5).map(|k| TorusField::from_real_fn(2, move |s, _| 0.1 * k as f64 * (2.0 + s.cos()))).collect();
        let ok = family_monotonicity_check(&fam, 3.0 * 0.5 + 1.0);
        assert!(ok.monotone && ok.bound_satisfied);
        let bad = family_monotonicity_check(&fam, 0.5);
        assert!(bad.monotone && !bad.bound_satisfied);
        assert!((bad.sup_norm - 1.5).abs() < 1e-12);
    }

    #[test]
    fn linear_function_meets_the_bound() {
        let h = TorusField::from_real_fn(2, |s, _| s.sin());
        let r = gradient_bound_check(&h, (0.0, 0.0), 1.0, 0.5);
        assert!(r.satisfied);
    }
}

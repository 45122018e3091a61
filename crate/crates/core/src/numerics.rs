//! Small numerical kernels shared across modules: fixed-step RK4,
//! cumulative Simpson quadrature, finite-difference derivatives of sampled
//! data, least-squares lines, a quintic smooth step and a square 2D FFT.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

/// One classical Runge-Kutta step for an autonomous system.
pub fn rk4_step<const D: usize>(f: &impl Fn(&[f64; D]) -> [f64; D], y: &[f64; D], h: f64) -> [f64; D] {
    let k1 = f(y);
    let y2 = axpy(y, &k1, 0.5 * h);
    let k2 = f(&y2);
    let y3 = axpy(y, &k2, 0.5 * h);
    let k3 = f(&y3);
    let y4 = axpy(y, &k3, h);
    let k4 = f(&y4);
    let mut out = *y;
    for i in 0..D {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn axpy<const D: usize>(y: &[f64; D], k: &[f64; D], a: f64) -> [f64; D] {
    let mut out = *y;
    for i in 0..D {
        out[i] += a * k[i];
    }
    out
}

/// Cumulative integral of uniformly spaced samples by composite Simpson.
///
/// Even indices use whole Simpson panels; odd indices add the three-point
/// end correction over the last interval.
pub fn cumulative_simpson(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n == 2 {
        out[1] = 0.5 * h * (f[0] + f[1]);
        return out;
    }
    // Odd index 1 from the quadratic through f0, f1, f2.
    out[1] = h / 12.0 * (5.0 * f[0] + 8.0 * f[1] - f[2]);
    let mut i = 2;
    while i < n {
        out[i] = out[i - 2] + h / 3.0 * (f[i - 2] + 4.0 * f[i - 1] + f[i]);
        if i + 1 < n {
            out[i + 1] = out[i] + h / 12.0 * (-f[i - 1] + 8.0 * f[i] + 5.0 * f[i + 1]);
        }
        i += 2;
    }
    out
}

/// Composite Simpson integral of uniform samples (trapezoid fix-up for an
/// even sample count).
pub fn simpson(f: &[f64], h: f64) -> f64 {
    cumulative_simpson(f, h).last().copied().unwrap_or(0.0)
}

/// Fourth-order finite-difference derivative of uniformly spaced samples.
///
/// Central five-point stencils in the interior, one-sided five-point
/// stencils at the first and last two nodes. Requires at least five samples.
pub fn fd_derivative4(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    assert!(n >= 5, "fd_derivative4 needs at least five samples");
    let mut d = vec![0.0; n];
    for i in 2..n - 2 {
        d[i] = (y[i - 2] - 8.0 * y[i - 1] + 8.0 * y[i + 1] - y[i + 2]) / (12.0 * h);
    }
    let fwd = |s: &[f64]| (-25.0 * s[0] + 48.0 * s[1] - 36.0 * s[2] + 16.0 * s[3] - 3.0 * s[4]) / (12.0 * h);
    let fwd1 = |s: &[f64]| (-3.0 * s[0] - 10.0 * s[1] + 18.0 * s[2] - 6.0 * s[3] + s[4]) / (12.0 * h);
    d[0] = fwd(&y[0..5]);
    d[1] = fwd1(&y[0..5]);
    let rev: Vec<f64> = y[n - 5..].iter().rev().copied().collect();
    d[n - 1] = -fwd(&rev);
    d[n - 2] = -fwd1(&rev);
    d
}

/// Ordinary least-squares line `y = intercept + slope * x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

/// Quintic smooth step on [0, 1]: value, first and second derivative.
///
/// `S(0) = 0`, `S(1) = 1`, first and second derivatives vanish at both ends.
pub fn smoothstep5(x: f64) -> (f64, f64, f64) {
    if x <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if x >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let x2 = x * x;
    let x3 = x2 * x;
    let s = x3 * (10.0 - 15.0 * x + 6.0 * x2);
    let ds = 30.0 * x2 * (1.0 - x) * (1.0 - x);
    let dds = 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
    (s, ds, dds)
}

/// Reduce an angle into `[0, 2*pi)`.
pub fn wrap_angle(a: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let w = a.rem_euclid(tau);
    if w >= tau {
        0.0
    } else {
        w
    }
}

/// Distance between two angles on the circle.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    d.min(std::f64::consts::TAU - d)
}

/// Evenly spaced points including both endpoints.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Logarithmically spaced points including both endpoints.
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    linspace(a.ln(), b.ln(), n).into_iter().map(f64::exp).collect()
}

/// Grids at least this wide transform their rows and columns in parallel.
const PARALLEL_FFT_SIZE: usize = 128;

/// Forward and inverse 2D FFT plans for one square grid size; the inverse
/// is scaled by `1/n²`.
pub(crate) struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    fn run(&self, data: &mut [Complex64], inverse: bool, scale: bool) {
        let n = self.n;
        let plan = if inverse { &self.inv } else { &self.fwd };
        if n >= PARALLEL_FFT_SIZE {
            data.par_chunks_mut(n).for_each(|row| plan.process(row));
        } else {
            data.chunks_mut(n).for_each(|row| plan.process(row));
        }
        let mut t = transpose(data, n);
        if n >= PARALLEL_FFT_SIZE {
            t.par_chunks_mut(n).for_each(|col| plan.process(col));
        } else {
            t.chunks_mut(n).for_each(|col| plan.process(col));
        }
        let back = transpose(&t, n);
        data.copy_from_slice(&back);
        if inverse && scale {
            let s = 1.0 / (n * n) as f64;
            data.iter_mut().for_each(|v| *v *= s);
        }
    }

    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.run(data, false, false);
    }

    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, true, true);
    }

    /// Inverse transform without the `1/n²` factor: evaluates a Fourier sum.
    pub(crate) fn synthesize(&self, data: &mut [Complex64]) {
        self.run(data, true, false);
    }
}

fn transpose(data: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for (j, row) in out.chunks_mut(n).enumerate() {
        for (i, v) in row.iter_mut().enumerate() {
            *v = data[i * n + j];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_for_cubics_at_even_nodes() {
        let h = 0.1;
        let f: Vec<f64> = (0..11).map(|i| (i as f64 * h).powi(3)).collect();
        let c = cumulative_simpson(&f, h);
        for (i, v) in c.iter().enumerate().step_by(2) {
            let x = i as f64 * h;
            assert!((v - x.powi(4) / 4.0).abs() < 1e-14, "i = {i}");
        }
    }

    #[test]
    fn simpson_is_exact_for_quadratics_everywhere() {
        let h = 0.1;
        let f: Vec<f64> = (0..12).map(|i| (i as f64 * h).powi(2)).collect();
        let c = cumulative_simpson(&f, h);
        for (i, v) in c.iter().enumerate() {
            let x = i as f64 * h;
            assert!((v - x.powi(3) / 3.0).abs() < 1e-14, "i = {i}");
        }
    }

    #[test]
    fn fd4_is_exact_for_quartics() {
        let h = 0.05;
        let y: Vec<f64> = (0..12).map(|i| (i as f64 * h).powi(4) - 2.0 * (i as f64 * h)).collect();
        let d = fd_derivative4(&y, h);
        for (i, v) in d.iter().enumerate() {
            let x = i as f64 * h;
            assert!((v - (4.0 * x.powi(3) - 2.0)).abs() < 1e-10, "i = {i}");
        }
    }

    #[test]
    fn rk4_exponential() {
        let f = |y: &[f64; 1]| [-y[0]];
        let mut y = [1.0];
        for _ in 0..100 {
            y = rk4_step(&f, &y, 0.01);
        }
        assert!((y[0] - (-1.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn smoothstep_endpoints() {
        assert_eq!(smoothstep5(0.0), (0.0, 0.0, 0.0));
        assert_eq!(smoothstep5(1.0), (1.0, 0.0, 0.0));
        let (s, _, _) = smoothstep5(0.5);
        assert!((s - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fit_recovers_line() {
        let x = linspace(0.0, 1.0, 9);
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 3.0 * v).collect();
        let (a, b) = linear_fit(&x, &y);
        assert!((a - 2.0).abs() < 1e-14 && (b + 3.0).abs() < 1e-14);
    }
}

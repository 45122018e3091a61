//! The asymptotic operator `−J₀ d/dt + κ` on loops in `ℝ²`, its spectrum,
//! relative decay fits on half-cylinders, circle-map degrees and the
//! zero-count identity between two boundary rows.
//!
//! Loops are identified with complex samples `x + iy`, so `J₀` acts as
//! multiplication by `i` and the operator is the Fourier multiplier
//! `κ + l` on `e^{ilt}`. The Nyquist mode is assigned wavenumber `−N/2`.

use std::f64::consts::{PI, TAU};
use std::io::{Read, Write};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::linear_fit;

/// `N` samples of a loop in `ℝ²` at `t_j = 2πj/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopField {
    values: Vec<[f64; 2]>,
}

impl LoopField {
    /// Wrap samples; `N` must be even and at least 8.
    pub fn new(values: Vec<[f64; 2]>) -> Result<Self> {
        let n = values.len();
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::Precondition(format!("loop needs an even N >= 8, got {n}")));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Precondition("loop samples must be finite".into()));
        }
        Ok(Self { values })
    }

    /// Sample `f` at `t_j = 2πj/N`.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> [f64; 2]) -> Result<Self> {
        Self::new((0..n).map(|j| f(TAU * j as f64 / n as f64)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }

    /// Sample times `2πj/N`.
    pub fn times(&self) -> Vec<f64> {
        let n = self.len();
        (0..n).map(|j| TAU * j as f64 / n as f64).collect()
    }

    fn to_complex(&self) -> Vec<Complex64> {
        self.values.iter().map(|v| Complex64::new(v[0], v[1])).collect()
    }

    fn from_complex(z: &[Complex64]) -> Self {
        Self { values: z.iter().map(|c| [c.re, c.im]).collect() }
    }

    /// Discrete `L²` inner product `(2π/N) Σ ⟨h_j, g_j⟩`.
    pub fn inner(&self, other: &LoopField) -> f64 {
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a[0] * b[0] + a[1] * b[1]).sum();
        s * TAU / self.len() as f64
    }

    /// Root-mean-square norm of the samples.
    pub fn rms(&self) -> f64 {
        (self.values.iter().map(|v| v[0] * v[0] + v[1] * v[1]).sum::<f64>() / self.len() as f64).sqrt()
    }

    /// Trigonometric interpolation onto `factor · N` samples.
    pub fn refine(&self, factor: usize) -> LoopField {
        let n = self.len();
        let m = n * factor;
        let mut planner = FftPlanner::new();
        let mut z = self.to_complex();
        planner.plan_fft_forward(n).process(&mut z);
        let mut w = vec![Complex64::new(0.0, 0.0); m];
        for (j, c) in z.iter().enumerate() {
            if j < n / 2 {
                w[j] = *c;
            } else if j > n / 2 {
                w[m - (n - j)] = *c;
            } else {
                // Split the Nyquist coefficient between ±N/2.
                w[j] = 0.5 * c;
                w[m - j] = 0.5 * c;
            }
        }
        planner.plan_fft_inverse(m).process(&mut w);
        let scale = 1.0 / n as f64;
        LoopField::from_complex(&w.iter().map(|c| c * scale).collect::<Vec<_>>())
    }

    /// Read CSV `t,x,y`.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(reader);
        let headers = rd.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["t", "x", "y"] {
            return Err(Error::Schema(format!("expected header t,x,y, got {headers:?}")));
        }
        let mut values = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let x: f64 = rec[1].trim().parse().map_err(|e| Error::Schema(format!("x: {e}")))?;
            let y: f64 = rec[2].trim().parse().map_err(|e| Error::Schema(format!("y: {e}")))?;
            values.push([x, y]);
        }
        Self::new(values)
    }

    /// Write CSV `t,x,y`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "x", "y"])?;
        for (t, v) in self.times().iter().zip(&self.values) {
            w.write_record(&[t.to_string(), v[0].to_string(), v[1].to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn wavenumber(j: usize, n: usize) -> f64 {
    if j < n / 2 {
        j as f64
    } else {
        j as f64 - n as f64
    }
}

/// `−J₀ h' + κ h` with `h'` by spectral differentiation.
pub fn asymptotic_apply(kappa: f64, h: &LoopField) -> LoopField {
    let n = h.len();
    let mut planner = FftPlanner::new();
    let mut z = h.to_complex();
    planner.plan_fft_forward(n).process(&mut z);
    for (j, c) in z.iter_mut().enumerate() {
        *c *= (kappa + wavenumber(j, n)) / n as f64;
    }
    planner.plan_fft_inverse(n).process(&mut z);
    LoopField::from_complex(&z)
}

/// One eigenvalue cluster of the discretized operator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenCluster {
    /// Mean of the clustered eigenvalues.
    pub value: f64,
    pub multiplicity: usize,
    /// Nearest integer `l` with `value ≈ κ + l`.
    pub l: i64,
    /// Largest deviation of a member from `κ + l`.
    pub deviation: f64,
}

/// Eigenvalues of the `2N × 2N` real matrix of the discretized operator.
///
/// Returns the `n_eigs` clusters closest to `κ`, sorted by value.
pub fn spectrum(kappa: f64, n: usize, n_eigs: usize) -> Result<Vec<EigenCluster>> {
    if n < 8 || !n.is_multiple_of(2) {
        return Err(Error::Precondition(format!("N = {n} must be even and at least 8")));
    }
    if n_eigs == 0 || n_eigs > n {
        return Err(Error::Precondition(format!("n_eigs = {n_eigs} must lie in [1, {n}]")));
    }
    let dim = 2 * n;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for col in 0..dim {
        let mut v = vec![[0.0; 2]; n];
        v[col / 2][col % 2] = 1.0;
        let out = asymptotic_apply(kappa, &LoopField { values: v });
        for (j, x) in out.values.iter().enumerate() {
            m[(2 * j, col)] = x[0];
            m[(2 * j + 1, col)] = x[1];
        }
    }
    let sym = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym.clone());
    let residuals: Vec<f64> = (0..dim)
        .map(|i| {
            let v = eig.eigenvectors.column(i);
            (&sym * v - v * eig.eigenvalues[i]).norm()
        })
        .collect();
    let worst = residuals.iter().cloned().fold(0.0, f64::max);
    if worst > 1e-8 {
        return Err(Error::Numeric(format!("eigen-solve residual {worst:e}; residual norms {residuals:?}")));
    }
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    let mut clusters: Vec<Vec<f64>> = Vec::new();
    for v in vals {
        match clusters.last_mut() {
            Some(c) if (v - c[c.len() - 1]).abs() < 1e-6 => c.push(v),
            _ => clusters.push(vec![v]),
        }
    }
    let mut out: Vec<EigenCluster> = clusters
        .into_iter()
        .map(|c| {
            let value = c.iter().sum::<f64>() / c.len() as f64;
            let l = (value - kappa).round() as i64;
            let target = kappa + l as f64;
            EigenCluster {
                value,
                multiplicity: c.len(),
                l,
                deviation: c.iter().map(|x| (x - target).abs()).fold(0.0, f64::max),
            }
        })
        .collect();
    out.sort_by(|a, b| (a.value - kappa).abs().total_cmp(&(b.value - kappa).abs()).then(a.value.total_cmp(&b.value)));
    out.truncate(n_eigs);
    out.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(out)
}

/// Signed angle from `a` to `b` in `(−π, π]`.
fn angle_step(a: [f64; 2], b: [f64; 2]) -> f64 {
    let cross = a[0] * b[1] - a[1] * b[0];
    let dot = a[0] * b[0] + a[1] * b[1];
    cross.atan2(dot)
}

/// Refinement doublings allowed in [`circle_degree`].
const DEGREE_REFINEMENTS: usize = 6;

/// Winding number of the loop around the origin.
///
/// Angle increments are accumulated between consecutive samples; while some
/// increment reaches `π/2` the loop is refined by trigonometric interpolation.
pub fn circle_degree(loop_: &LoopField) -> Result<i64> {
    let mut cur = loop_.clone();
    for _ in 0..=DEGREE_REFINEMENTS {
        let max = cur.values.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max);
        if let Some(j) = cur.values.iter().position(|v| v[0].hypot(v[1]) <= 1e-12 * max) {
            return Err(Error::Precondition(format!("loop sample {j} vanishes")));
        }
        let n = cur.len();
        let steps: Vec<f64> = (0..n).map(|j| angle_step(cur.values[j], cur.values[(j + 1) % n])).collect();
        if steps.iter().all(|d| d.abs() < PI / 2.0) {
            return Ok((steps.iter().sum::<f64>() / TAU).round() as i64);
        }
        cur = cur.refine(2);
    }
    Err(Error::Numeric("loop degree stays ambiguous after refinement".into()))
}

/// Magic bytes of the binary half-cylinder format.
pub const HCF1_MAGIC: &[u8; 4] = b"HCF1";

/// Samples of an `ℝ²`-valued field on `[s_0, s_m] × S¹`, row-major in `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfCylinderField {
    s_grid: Vec<f64>,
    n_t: usize,
    values: Vec<[f64; 2]>,
}

impl HalfCylinderField {
    /// Wrap samples: `values[i * n_t + j]` is the value at `(s_i, 2πj/n_t)`.
    pub fn new(s_grid: Vec<f64>, n_t: usize, values: Vec<[f64; 2]>) -> Result<Self> {
        if s_grid.len() < 2 || s_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Precondition("s grid must be strictly increasing with 2+ rows".into()));
        }
        if n_t < 8 || !n_t.is_multiple_of(2) {
            return Err(Error::Precondition(format!("rows need an even length >= 8, got {n_t}")));
        }
        if values.len() != s_grid.len() * n_t {
            return Err(Error::Precondition(format!("{} values for a {} x {n_t} grid", values.len(), s_grid.len())));
        }
        Ok(Self { s_grid, n_t, values })
    }

    /// Sample `f(s, t)` on the grid.
    pub fn from_fn(s_grid: Vec<f64>, n_t: usize, f: impl Fn(f64, f64) -> [f64; 2]) -> Result<Self> {
        let mut values = Vec::with_capacity(s_grid.len() * n_t);
        for &s in &s_grid {
            for j in 0..n_t {
                values.push(f(s, TAU * j as f64 / n_t as f64));
            }
        }
        Self::new(s_grid, n_t, values)
    }

    pub fn s_grid(&self) -> &[f64] {
        &self.s_grid
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }

    pub fn at(&self, i: usize, j: usize) -> [f64; 2] {
        self.values[i * self.n_t + j % self.n_t]
    }

    /// Row `i` as a loop.
    pub fn row(&self, i: usize) -> LoopField {
        LoopField { values: self.values[i * self.n_t..(i + 1) * self.n_t].to_vec() }
    }

    /// Binary form: `HCF1`, `u32` row count, `u32` row length, the `s` grid
    /// as `f64`, then interleaved `f64` (x, y) row-major, little-endian.
    pub fn write_hcf1<W: Write>(&self, mut w: W) -> Result<()> {
        let mut buf = Vec::with_capacity(12 + 8 * self.s_grid.len() + 16 * self.values.len());
        buf.extend_from_slice(HCF1_MAGIC);
        buf.extend_from_slice(&(self.s_grid.len() as u32).to_le_bytes());
        buf.extend_from_slice(&(self.n_t as u32).to_le_bytes());
        for s in &self.s_grid {
            buf.extend_from_slice(&s.to_le_bytes());
        }
        for [x, y] in &self.values {
            buf.extend_from_slice(&x.to_le_bytes());
            buf.extend_from_slice(&y.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    /// Parse the binary form written by [`HalfCylinderField::write_hcf1`].
    pub fn read_hcf1<R: Read>(mut r: R) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        if buf.len() < 4 || &buf[0..4] != HCF1_MAGIC {
            return Err(Error::Format("missing HCF1 magic".into()));
        }
        if buf.len() < 12 {
            return Err(Error::Format(format!("truncated HCF1 header of {} bytes", buf.len())));
        }
        let n_s = u32::from_le_bytes(buf[4..8].try_into().expect("4 bytes")) as usize;
        let n_t = u32::from_le_bytes(buf[8..12].try_into().expect("4 bytes")) as usize;
        if n_s < 2 || n_t < 8 || !n_t.is_multiple_of(2) {
            return Err(Error::Precondition(format!("HCF1 header {n_s} x {n_t} needs 2+ rows of even length >= 8")));
        }
        let expected = 8 * n_s + 16 * n_s * n_t;
        let body = &buf[12..];
        if body.len() != expected {
            return Err(Error::Format(format!(
                "payload has {} bytes, expected {expected} for {n_s} x {n_t}",
                body.len()
            )));
        }
        let f = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8 bytes"));
        let (grid, vals) = body.split_at(8 * n_s);
        let s_grid = grid.chunks_exact(8).map(f).collect();
        let values = vals.chunks_exact(16).map(|c| [f(&c[0..8]), f(&c[8..16])]).collect();
        Self::new(s_grid, n_t, values)
    }
}

/// Output of [`relative_asymptotics_fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticFit {
    pub lambda_hat: f64,
    pub winding: i64,
    /// Limit loop `e^{−λ̂ s} diff(s, ·)` at the last row, normalized to unit rms.
    pub e_loop: LoopField,
    /// Fitted extra decay `d` of the remainder, `‖r(s)‖ ≤ M e^{−d s}`.
    pub remainder_rate: f64,
}

/// Fit `diff(s,t) = e^{λ s}(e(t) + r(s,t))` on the tail of a half-cylinder.
pub fn relative_asymptotics_fit(diff: &HalfCylinderField) -> Result<AsymptoticFit> {
    let m = diff.s_grid.len();
    let norms: Vec<f64> = (0..m).map(|i| diff.row(i).rms()).collect();
    let start = m / 2;
    if let Some(i) = (start..m).find(|&i| norms[i] == 0.0) {
        return Err(Error::Precondition(format!("row {i} of the tail vanishes identically")));
    }
    let max = norms[start..].iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (start..m).filter(|&i| norms[i] >= 1e3 * f64::EPSILON * max).collect();
    if keep.len() < 2 {
        return Err(Error::Precondition("fewer than two usable tail rows".into()));
    }
    let xs: Vec<f64> = keep.iter().map(|&i| diff.s_grid[i]).collect();
    let ys: Vec<f64> = keep.iter().map(|&i| norms[i].ln()).collect();
    let (_, lambda_hat) = linear_fit(&xs, &ys);

    let scaled = |i: usize| -> Vec<[f64; 2]> {
        let f = (-lambda_hat * diff.s_grid[i]).exp();
        diff.row(i).values.iter().map(|v| [v[0] * f, v[1] * f]).collect()
    };
    let limit = scaled(m - 1);
    let limit_rms = LoopField { values: limit.clone() }.rms();
    let e_loop = LoopField { values: limit.iter().map(|v| [v[0] / limit_rms, v[1] / limit_rms]).collect() };
    let winding = circle_degree(&e_loop)?;

    // Remainder decay over the first three quarters, relative to the limit.
    let mut rs = Vec::new();
    let mut rr = Vec::new();
    for i in 0..3 * m / 4 {
        let row = scaled(i);
        let rem = (row.iter().zip(&limit).map(|(a, b)| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sum::<f64>()
            / diff.n_t as f64)
            .sqrt();
        if rem > 1e-10 * limit_rms {
            rs.push(diff.s_grid[i]);
            rr.push((rem / limit_rms).ln());
        }
    }
    let remainder_rate = if rs.len() >= 2 { -linear_fit(&rs, &rr).1 } else { f64::INFINITY };
    Ok(AsymptoticFit { lambda_hat, winding, e_loop, remainder_rate })
}

/// A zero detected between two rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectedZero {
    pub s: f64,
    pub t: f64,
    pub order: i64,
}

/// Output of [`zero_count_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroCountReport {
    pub deg_lo: i64,
    pub deg_hi: i64,
    pub zero_order_sum: i64,
    pub zeros: Vec<DetectedZero>,
    pub consistent: bool,
}

fn nearest_row(grid: &[f64], s: f64) -> Result<usize> {
    if s < grid[0] || s > grid[grid.len() - 1] {
        return Err(Error::out_of_range("s", s, grid[0], grid[grid.len() - 1]));
    }
    Ok((0..grid.len()).min_by(|&a, &b| (grid[a] - s).abs().total_cmp(&(grid[b] - s).abs())).expect("nonempty grid"))
}

fn changes_sign(vals: &[f64; 4]) -> bool {
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    lo <= 0.0 && hi >= 0.0
}

/// Index box `[i0, i1] × [j0, j1]` in rows and (unwrapped) columns.
#[derive(Debug, Clone, Copy)]
struct CellBox {
    i0: usize,
    i1: usize,
    j0: i64,
    j1: i64,
}

impl CellBox {
    fn overlaps(&self, o: &CellBox, n: i64) -> bool {
        if self.i1 < o.i0 || o.i1 < self.i0 {
            return false;
        }
        (-1..=1).any(|k| {
            let (a0, a1) = (o.j0 + k * n, o.j1 + k * n);
            !(self.j1 < a0 || a1 < self.j0)
        })
    }

    fn merge(&self, o: &CellBox, n: i64) -> CellBox {
        // Shift `o` by the period that brings it next to `self`.
        let k = (-1..=1).min_by_key(|k| ((o.j0 + k * n) - self.j0).abs()).expect("nonempty");
        CellBox {
            i0: self.i0.min(o.i0),
            i1: self.i1.max(o.i1),
            j0: self.j0.min(o.j0 + k * n),
            j1: self.j1.max(o.j1 + k * n),
        }
    }
}

/// Check `deg(s_hi) = deg(s_lo) + Σ o(z)` for the zeros between two rows.
///
/// Candidate cells are those where both components change sign. Candidates
/// are grouped into boxes padded by one cell and each zero order is the
/// winding of the field around its box.
pub fn zero_count_check(field: &HalfCylinderField, s_lo: f64, s_hi: f64) -> Result<ZeroCountReport> {
    if !(s_hi > s_lo) {
        return Err(Error::Precondition(format!("need s_lo < s_hi, got {s_lo}, {s_hi}")));
    }
    let lo = nearest_row(&field.s_grid, s_lo)?;
    let hi = nearest_row(&field.s_grid, s_hi)?;
    if hi <= lo {
        return Err(Error::Precondition("s_lo and s_hi select the same row".into()));
    }
    let deg_lo = circle_degree(&field.row(lo)).map_err(|e| boundary_error(e, s_lo))?;
    let deg_hi = circle_degree(&field.row(hi)).map_err(|e| boundary_error(e, s_hi))?;
    let n = field.n_t as i64;

    let mut boxes: Vec<CellBox> = Vec::new();
    for i in lo..hi {
        for j in 0..field.n_t {
            let c = [field.at(i, j), field.at(i + 1, j), field.at(i + 1, j + 1), field.at(i, j + 1)];
            if changes_sign(&[c[0][0], c[1][0], c[2][0], c[3][0]])
                && changes_sign(&[c[0][1], c[1][1], c[2][1], c[3][1]])
            {
                let mut b = CellBox {
                    i0: i.saturating_sub(1).max(lo),
                    i1: (i + 2).min(hi),
                    j0: j as i64 - 1,
                    j1: j as i64 + 2,
                };
                // Absorb every overlapping box until none is left.
                while let Some(k) = boxes.iter().position(|o| b.overlaps(o, n)) {
                    let o = boxes.swap_remove(k);
                    b = b.merge(&o, n);
                }
                boxes.push(b);
            }
        }
    }

    let mut zeros = Vec::new();
    for b in boxes {
        let order = if b.j1 - b.j0 >= n {
            // The box wraps the whole circle: its boundary is the two rows.
            row_winding(field, b.i1)? - row_winding(field, b.i0)?
        } else {
            box_winding(field, &b)?
        };
        if order != 0 {
            let ds = 0.5 * (field.s_grid[b.i0] + field.s_grid[b.i1]);
            let dt = TAU * 0.5 * (b.j0 + b.j1) as f64 / n as f64;
            zeros.push(DetectedZero { s: ds, t: dt.rem_euclid(TAU), order });
        }
    }
    zeros.sort_by(|a, b| a.s.total_cmp(&b.s).then(a.t.total_cmp(&b.t)));
    let zero_order_sum = zeros.iter().map(|z| z.order).sum();
    Ok(ZeroCountReport { deg_lo, deg_hi, zero_order_sum, consistent: deg_hi == deg_lo + zero_order_sum, zeros })
}

fn boundary_error(e: Error, s: f64) -> Error {
    match e {
        Error::Precondition(d) => Error::Precondition(format!("boundary row s = {s}: {d}")),
        other => other,
    }
}

fn row_winding(field: &HalfCylinderField, i: usize) -> Result<i64> {
    let n = field.n_t;
    let steps: f64 = (0..n).map(|j| angle_step(field.at(i, j), field.at(i, j + 1))).sum();
    Ok((steps / TAU).round() as i64)
}

/// Winding around the box boundary, counterclockwise in the `(s, t)` plane.
fn box_winding(field: &HalfCylinderField, b: &CellBox) -> Result<i64> {
    let n = field.n_t as i64;
    let col = |j: i64| j.rem_euclid(n) as usize;
    let mut path: Vec<[f64; 2]> = Vec::new();
    for i in b.i0..=b.i1 {
        path.push(field.at(i, col(b.j0)));
    }
    for j in b.j0 + 1..=b.j1 {
        path.push(field.at(b.i1, col(j)));
    }
    for i in (b.i0..b.i1).rev() {
        path.push(field.at(i, col(b.j1)));
    }
    for j in (b.j0 + 1..b.j1).rev() {
        path.push(field.at(b.i0, col(j)));
    }
    let max = path.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max);
    if path.iter().any(|v| v[0].hypot(v[1]) <= 1e-12 * max) {
        return Err(Error::Numeric("field vanishes on a zero-isolating contour".into()));
    }
    let k = path.len();
    let mut total = 0.0;
    for m in 0..k {
        let d = angle_step(path[m], path[(m + 1) % k]);
        if d.abs() >= PI * 0.999 {
            return Err(Error::Numeric("zero-isolating contour is under-resolved".into()));
        }
        total += d;
    }
    Ok((total / TAU).round() as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn circle(l: i64) -> LoopField {
        LoopField::from_fn(32, |t| [(l as f64 * t).cos(), (l as f64 * t).sin()]).unwrap()
    }

    #[test]
    fn degree_of_basic_loops() {
        assert_eq!(circle_degree(&circle(3)).unwrap(), 3);
        assert_eq!(circle_degree(&circle(0)).unwrap(), 0);
        let rev = LoopField::from_fn(16, |t| [t.cos(), -t.sin()]).unwrap();
        assert_eq!(circle_degree(&rev).unwrap(), -1);
    }

    #[test]
    fn hcf1_round_trip_and_rejections() {
        let f = HalfCylinderField::from_fn(vec![0.0, 0.5, 1.25], 8, |s, t| [s * t.cos(), -t.sin()]).unwrap();
        let mut buf = Vec::new();
        f.write_hcf1(&mut buf).unwrap();
        assert_eq!(&buf[..4], HCF1_MAGIC);
        assert_eq!(HalfCylinderField::read_hcf1(&buf[..]).unwrap(), f);
        let mut bad = buf.clone();
        bad[3] = b'2';
        assert!(matches!(HalfCylinderField::read_hcf1(&bad[..]), Err(Error::Format(_))));
        let mut short = buf.clone();
        short.pop();
        assert!(matches!(HalfCylinderField::read_hcf1(&short[..]), Err(Error::Format(_))));
        let mut odd = buf;
        odd[8..12].copy_from_slice(&7u32.to_le_bytes());
        assert!(matches!(HalfCylinderField::read_hcf1(&odd[..]), Err(Error::Precondition(_))));
    }

    #[test]
    fn degree_refines_coarse_loops() {
        // Five turns on 12 samples: 150 degree increments before refinement.
        let coarse = LoopField::from_fn(12, |t| [(5.0 * t).cos(), (5.0 * t).sin()]).unwrap();
        assert_eq!(circle_degree(&coarse).unwrap(), 5);
    }

    #[test]
    fn degree_rejects_zero_samples() {
        let l = LoopField::from_fn(8, |t| [t.cos() * t.sin(), 0.0]).unwrap();
        assert!(circle_degree(&l).is_err());
    }

    #[test]
    fn loop_shape_is_checked() {
        assert!(LoopField::new(vec![[1.0, 0.0]; 6]).is_err());
        assert!(LoopField::new(vec![[1.0, 0.0]; 9]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn degree_is_scale_invariant(l in -4i64..=4, amp in proptest::collection::vec(0.1f64..10.0, 64)) {
            let base = LoopField::from_fn(64, |t| [(l as f64 * t).cos(), (l as f64 * t).sin()]).unwrap();
            let scaled = LoopField::new(base.values().iter().zip(&amp).map(|(v, a)| [v[0] * a, v[1] * a]).collect()).unwrap();
            prop_assert_eq!(circle_degree(&scaled).unwrap(), l);
        }

        #[test]
        fn operator_is_symmetric(
            kappa in -2.0f64..2.0,
            a in proptest::collection::vec(-1.0f64..1.0, 32),
            b in proptest::collection::vec(-1.0f64..1.0, 32),
        ) {
            let h = LoopField::new(a.chunks(2).map(|c| [c[0], c[1]]).collect()).unwrap();
            let g = LoopField::new(b.chunks(2).map(|c| [c[0], c[1]]).collect()).unwrap();
            let lhs = asymptotic_apply(kappa, &h).inner(&g);
            let rhs = h.inner(&asymptotic_apply(kappa, &g));
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }
    }
}

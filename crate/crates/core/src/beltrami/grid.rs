//! Complex samples on the uniform square grid `x_i = −L + i h`, `h = 2L/n`.

use std::io::{Read, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Magic bytes of the binary grid format.
pub const QCG1_MAGIC: &[u8; 4] = b"QCG1";

/// `n × n` complex samples on `[−L, L)²`, row-major in `y`.
///
/// `values[iy * n + ix]` is the sample at `x = −L + ix h`, `y = −L + iy h`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    n: usize,
    extent: f64,
    values: Vec<Complex64>,
}

impl GridField {
    /// Wrap samples; `n` must be a power of two (at least 8) and `L ≥ 2`.
    pub fn new(n: usize, extent: f64, values: Vec<Complex64>) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Precondition(format!("grid size {n} must be a power of two >= 8")));
        }
        if !(extent >= 2.0) || !extent.is_finite() {
            return Err(Error::Precondition(format!("grid half-width {extent} must be at least 2")));
        }
        if values.len() != n * n {
            return Err(Error::Precondition(format!("{} values for an {n} x {n} grid", values.len())));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Precondition("grid values must be finite".into()));
        }
        Ok(Self { n, extent, values })
    }

    /// All-zero field.
    pub fn zeros(n: usize, extent: f64) -> Result<Self> {
        Self::new(n, extent, vec![Complex64::new(0.0, 0.0); n * n])
    }

    /// Sample `f(z)` at every node.
    pub fn from_fn(n: usize, extent: f64, f: impl Fn(Complex64) -> Complex64 + Sync) -> Result<Self> {
        let h = 2.0 * extent / n as f64;
        let values: Vec<Complex64> = (0..n * n)
            .into_par_iter()
            .map(|k| f(Complex64::new(-extent + (k % n) as f64 * h, -extent + (k / n) as f64 * h)))
            .collect();
        Self::new(n, extent, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Half-width `L` of the square.
    pub fn extent(&self) -> f64 {
        self.extent
    }

    /// Grid spacing `2L/n`.
    pub fn h(&self) -> f64 {
        2.0 * self.extent / self.n as f64
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Node coordinate `z = x + iy`.
    pub fn point(&self, ix: usize, iy: usize) -> Complex64 {
        let h = self.h();
        Complex64::new(-self.extent + ix as f64 * h, -self.extent + iy as f64 * h)
    }

    /// Node coordinate of flat index `k`.
    pub fn point_at(&self, k: usize) -> Complex64 {
        self.point(k % self.n, k / self.n)
    }

    pub fn get(&self, ix: usize, iy: usize) -> Complex64 {
        self.values[iy * self.n + ix]
    }

    /// Flat index of the node at `z = 0`.
    pub fn origin_index(&self) -> usize {
        (self.n / 2) * self.n + self.n / 2
    }

    pub fn at_origin(&self) -> Complex64 {
        self.values[self.origin_index()]
    }

    /// Same grid with values `f(z, v)`.
    pub fn map(&self, f: impl Fn(Complex64, Complex64) -> Complex64 + Sync) -> GridField {
        let values = self.values.par_iter().enumerate().map(|(k, v)| f(self.point_at(k), *v)).collect();
        GridField { n: self.n, extent: self.extent, values }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &GridField, f: impl Fn(Complex64, Complex64) -> Complex64 + Sync) -> GridField {
        assert!(self.same_grid(other), "fields live on different grids");
        let values = self.values.par_iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect();
        GridField { n: self.n, extent: self.extent, values }
    }

    /// True when both fields share `n` and `L`.
    pub fn same_grid(&self, other: &GridField) -> bool {
        self.n == other.n && self.extent == other.extent
    }

    /// Discrete `L^p` norm `(Σ |v|^p h²)^{1/p}` over nodes with `|z| ≤ radius`.
    pub fn lp_norm_in(&self, p: f64, radius: f64) -> f64 {
        let h2 = self.h() * self.h();
        let mut s = 0.0;
        for (k, v) in self.values.iter().enumerate() {
            if self.point_at(k).norm() <= radius {
                s += v.norm().powf(p);
            }
        }
        (s * h2).powf(1.0 / p)
    }

    /// Discrete `L^p` norm over the whole grid.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let h2 = self.h() * self.h();
        let s: f64 = self.values.iter().map(|v| v.norm().powf(p)).sum();
        (s * h2).powf(1.0 / p)
    }

    /// Discrete `L²` norm over the whole grid.
    pub fn l2_norm(&self) -> f64 {
        let h2 = self.h() * self.h();
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * h2).sqrt()
    }

    /// Largest modulus.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest modulus over nodes with `|z| ≤ radius`.
    pub fn sup_norm_in(&self, radius: f64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(k, _)| self.point_at(*k).norm() <= radius)
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max)
    }

    /// `∫ v dA` by the trapezoid (node) rule.
    pub fn integral(&self) -> Complex64 {
        let h2 = self.h() * self.h();
        self.values.iter().sum::<Complex64>() * h2
    }

    /// Binary form: `QCG1`, `u32` n, `f64` L, then interleaved `f64` (re, im), little-endian.
    pub fn write_qcg1<W: Write>(&self, mut w: W) -> Result<()> {
        let mut buf = Vec::with_capacity(16 + 16 * self.values.len());
        buf.extend_from_slice(QCG1_MAGIC);
        buf.extend_from_slice(&(self.n as u32).to_le_bytes());
        buf.extend_from_slice(&self.extent.to_le_bytes());
        for v in &self.values {
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    /// Parse the binary form written by [`GridField::write_qcg1`].
    pub fn read_qcg1<R: Read>(mut r: R) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        if buf.len() < 4 || &buf[0..4] != QCG1_MAGIC {
            return Err(Error::Format("missing QCG1 magic".into()));
        }
        if buf.len() < 16 {
            return Err(Error::Format(format!("truncated QCG1 header of {} bytes", buf.len())));
        }
        let n = u32::from_le_bytes(buf[4..8].try_into().expect("4 bytes")) as usize;
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Precondition(format!("QCG1 header grid size {n} is not a power of two >= 8")));
        }
        let extent = f64::from_le_bytes(buf[8..16].try_into().expect("8 bytes"));
        let body = &buf[16..];
        if body.len() != 16 * n * n {
            return Err(Error::Format(format!(
                "payload has {} bytes, expected {} for n = {n}",
                body.len(),
                16 * n * n
            )));
        }
        let values = body
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[0..8].try_into().expect("8 bytes")),
                    f64::from_le_bytes(c[8..16].try_into().expect("8 bytes")),
                )
            })
            .collect();
        Self::new(n, extent, values).map_err(|e| Error::Format(e.to_string()))
    }

    /// CSV form `ix,iy,re,im`, one row per node.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["ix", "iy", "re", "im"])?;
        for iy in 0..self.n {
            for ix in 0..self.n {
                let v = self.get(ix, iy);
                out.write_record(&[ix.to_string(), iy.to_string(), v.re.to_string(), v.im.to_string()])?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Parse the CSV form; the grid half-width is supplied by the caller.
    pub fn read_csv<R: Read>(r: R, extent: f64) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let headers = rd.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["ix", "iy", "re", "im"] {
            return Err(Error::Schema(format!("expected header ix,iy,re,im, got {headers:?}")));
        }
        let mut rows = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let parse_u = |i: usize| rec[i].trim().parse::<usize>().map_err(|e| Error::Schema(e.to_string()));
            let parse_f = |i: usize| rec[i].trim().parse::<f64>().map_err(|e| Error::Schema(e.to_string()));
            rows.push((parse_u(0)?, parse_u(1)?, Complex64::new(parse_f(2)?, parse_f(3)?)));
        }
        let n = (rows.len() as f64).sqrt().round() as usize;
        if n * n != rows.len() {
            return Err(Error::Schema(format!("{} rows do not form a square grid", rows.len())));
        }
        let mut values = vec![Complex64::new(f64::NAN, 0.0); n * n];
        for (ix, iy, v) in rows {
            if ix >= n || iy >= n {
                return Err(Error::Schema(format!("node ({ix}, {iy}) outside an {n} x {n} grid")));
            }
            values[iy * n + ix] = v;
        }
        Self::new(n, extent, values).map_err(|e| Error::Schema(e.to_string()))
    }
}

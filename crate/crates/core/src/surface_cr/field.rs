//! Truncated Fourier series `Σ c_{m,n} e^{i(ms+nt)}` on the flat torus
//! `[0, 2π)²`, `|m|, |n| ≤ N`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::TAU;
use std::io::{BufRead, Read, Write};
use std::rc::Rc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Fft2;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Relative tolerance of the conjugate-symmetry check on real fields.
pub const REAL_SYMMETRY_TOL: f64 = 1e-12;

/// Even collocation size with 3/2 zero-padding for `N` modes.
pub fn collocation_size(n_modes: usize) -> usize {
    let m = (3 * (2 * n_modes + 1)).div_ceil(4) * 2;
    m.max(2 * n_modes + 2)
}

/// Collocation nodes `s_i = 2πi/M`; node `(i, j)` is stored at `i M + j`.
pub fn node(m: usize, k: usize) -> (f64, f64) {
    let h = TAU / m as f64;
    ((k / m) as f64 * h, (k % m) as f64 * h)
}

/// A function on the torus by its Fourier coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusField {
    n_modes: usize,
    coeffs: Vec<Complex64>,
    real: bool,
}

#[derive(Serialize, Deserialize)]
struct Header {
    #[serde(rename = "N")]
    n: usize,
    real_flag: bool,
}

impl TorusField {
    /// Coefficients row-major over `(m, n)`, `m, n = −N..=N`. A real field
    /// must be conjugate symmetric; it is then symmetrized exactly.
    pub fn new(n_modes: usize, coeffs: Vec<Complex64>, real: bool) -> Result<Self> {
        let w = 2 * n_modes + 1;
        if coeffs.len() != w * w {
            return Err(Error::Precondition(format!("{} coefficients for N = {n_modes}", coeffs.len())));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Precondition("coefficients must be finite".into()));
        }
        let mut f = Self { n_modes, coeffs, real: false };
        if real {
            let scale = f.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
            let asym = f.conjugate_asymmetry();
            if asym > REAL_SYMMETRY_TOL * scale.max(1.0) {
                return Err(Error::Precondition(format!("real field is not conjugate symmetric ({asym:e})")));
            }
            f = f.re();
        }
        Ok(f)
    }

    /// The zero field.
    pub fn zeros(n_modes: usize, real: bool) -> Self {
        let w = 2 * n_modes + 1;
        Self { n_modes, coeffs: vec![ZERO; w * w], real }
    }

    /// The constant `c`.
    pub fn constant(n_modes: usize, c: Complex64) -> Self {
        let mut f = Self::zeros(n_modes, c.im == 0.0);
        let k = f.index(0, 0);
        f.coeffs[k] = c;
        f
    }

    /// Coefficients from `c(m, n)`; a real field keeps the `(m, n)` value on
    /// the half-plane `m > 0` or `m = 0, n ≥ 0` and mirrors it.
    pub fn from_coeff_fn(n_modes: usize, real: bool, c: impl Fn(i64, i64) -> Complex64) -> Self {
        let nn = n_modes as i64;
        let mut f = Self::zeros(n_modes, real);
        for m in -nn..=nn {
            for n in -nn..=nn {
                let k = f.index(m, n);
                f.coeffs[k] = if !real || m > 0 || (m == 0 && n > 0) {
                    c(m, n)
                } else if m == 0 && n == 0 {
                    Complex64::new(c(0, 0).re, 0.0)
                } else {
                    c(-m, -n).conj()
                };
            }
        }
        f
    }

    /// Truncated interpolant of `f(s, t)` sampled on the collocation grid.
    pub fn from_fn(n_modes: usize, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let m = collocation_size(n_modes);
        let values: Vec<Complex64> = (0..m * m)
            .map(|k| {
                let (s, t) = node(m, k);
                f(s, t)
            })
            .collect();
        Self::from_grid(n_modes, m, &values, false)
    }

    /// Truncated interpolant of a real `f(s, t)`.
    pub fn from_real_fn(n_modes: usize, f: impl Fn(f64, f64) -> f64) -> Self {
        let m = collocation_size(n_modes);
        let values: Vec<Complex64> = (0..m * m)
            .map(|k| {
                let (s, t) = node(m, k);
                Complex64::new(f(s, t), 0.0)
            })
            .collect();
        Self::from_grid(n_modes, m, &values, true)
    }

    /// Coefficients `|m|, |n| ≤ N` of grid samples on `M × M` nodes.
    pub fn from_grid(n_modes: usize, m: usize, values: &[Complex64], real: bool) -> Self {
        assert!(m >= 2 * n_modes + 2, "grid {m} too coarse for N = {n_modes}");
        assert_eq!(values.len(), m * m);
        let mut data = values.to_vec();
        plan(m).forward(&mut data);
        let scale = 1.0 / (m * m) as f64;
        let nn = n_modes as i64;
        let mut f = Self::zeros(n_modes, false);
        for a in -nn..=nn {
            for b in -nn..=nn {
                let k = f.index(a, b);
                f.coeffs[k] = data[wrap(a, m) * m + wrap(b, m)] * scale;
            }
        }
        if real {
            f.re()
        } else {
            f
        }
    }

    /// Fourier truncation `N`.
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    fn index(&self, m: i64, n: i64) -> usize {
        let nn = self.n_modes as i64;
        ((m + nn) * (2 * nn + 1) + (n + nn)) as usize
    }

    /// `c_{m,n}`, zero outside the truncation.
    pub fn coeff(&self, m: i64, n: i64) -> Complex64 {
        let nn = self.n_modes as i64;
        if m.abs() > nn || n.abs() > nn {
            ZERO
        } else {
            self.coeffs[self.index(m, n)]
        }
    }

    /// Mean value `c_{0,0}`.
    pub fn mean(&self) -> Complex64 {
        self.coeff(0, 0)
    }

    fn conjugate_asymmetry(&self) -> f64 {
        let nn = self.n_modes as i64;
        let mut worst: f64 = 0.0;
        for m in -nn..=nn {
            for n in -nn..=nn {
                worst = worst.max((self.coeff(m, n) - self.coeff(-m, -n).conj()).norm());
            }
        }
        worst
    }

    fn map_modes(&self, real: bool, f: impl Fn(i64, i64, Complex64) -> Complex64) -> Self {
        let nn = self.n_modes as i64;
        let mut out = Self::zeros(self.n_modes, real);
        for m in -nn..=nn {
            for n in -nn..=nn {
                let k = self.index(m, n);
                out.coeffs[k] = f(m, n, self.coeffs[k]);
            }
        }
        out
    }

    /// Real part, `(c_{m,n} + conj c_{−m,−n})/2`.
    pub fn re(&self) -> Self {
        self.map_modes(true, |m, n, c| (c + self.coeff(-m, -n).conj()) * 0.5)
    }

    /// Imaginary part, `(c_{m,n} − conj c_{−m,−n})/(2i)`.
    pub fn im(&self) -> Self {
        self.map_modes(true, |m, n, c| (c - self.coeff(-m, -n).conj()) / Complex64::new(0.0, 2.0))
    }

    /// `∂/∂s`.
    pub fn d_s(&self) -> Self {
        self.map_modes(self.real, |m, _, c| c * Complex64::new(0.0, m as f64))
    }

    /// `∂/∂t`.
    pub fn d_t(&self) -> Self {
        self.map_modes(self.real, |_, n, c| c * Complex64::new(0.0, n as f64))
    }

    /// Normalized `∂̄ = (∂s + i ∂t)/2`, symbol `(im − n)/2`.
    pub fn dbar(&self) -> Self {
        self.map_modes(false, |m, n, c| c * Complex64::new(-(n as f64), m as f64) * 0.5)
    }

    /// `self + other` on the larger truncation.
    pub fn add(&self, other: &TorusField) -> Self {
        let nn = self.n_modes.max(other.n_modes);
        let real = self.real && other.real;
        let mut out = Self::zeros(nn, real);
        let ni = nn as i64;
        for m in -ni..=ni {
            for n in -ni..=ni {
                let k = out.index(m, n);
                out.coeffs[k] = self.coeff(m, n) + other.coeff(m, n);
            }
        }
        out
    }

    /// `self − other`.
    pub fn sub(&self, other: &TorusField) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// `c · self`; real fields stay real for real `c`.
    pub fn scale(&self, c: Complex64) -> Self {
        self.map_modes(self.real && c.im == 0.0, |_, _, v| v * c)
    }

    /// Same function on truncation `n_modes` (zero padded or cut).
    pub fn resize(&self, n_modes: usize) -> Self {
        let mut out = Self::zeros(n_modes, self.real);
        let ni = n_modes as i64;
        for m in -ni..=ni {
            for n in -ni..=ni {
                let k = out.index(m, n);
                out.coeffs[k] = self.coeff(m, n);
            }
        }
        out
    }

    /// `f(s, t)` by direct summation.
    pub fn eval(&self, s: f64, t: f64) -> Complex64 {
        let nn = self.n_modes as i64;
        let mut v = ZERO;
        for m in -nn..=nn {
            for n in -nn..=nn {
                v += self.coeff(m, n) * Complex64::from_polar(1.0, m as f64 * s + n as f64 * t);
            }
        }
        v
    }

    /// Samples on the `M × M` collocation grid.
    pub fn to_grid(&self, m: usize) -> Vec<Complex64> {
        assert!(m >= 2 * self.n_modes + 2, "grid {m} too coarse for N = {}", self.n_modes);
        let mut data = vec![ZERO; m * m];
        let nn = self.n_modes as i64;
        for a in -nn..=nn {
            for b in -nn..=nn {
                data[wrap(a, m) * m + wrap(b, m)] = self.coeff(a, b);
            }
        }
        plan(m).synthesize(&mut data);
        data
    }

    /// Real parts of the samples.
    pub fn to_real_grid(&self, m: usize) -> Vec<f64> {
        self.to_grid(m).into_iter().map(|v| v.re).collect()
    }

    /// `‖f‖_{L²}` by Parseval, `(4π² Σ |c|²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        TAU * self.coeff_norm()
    }

    /// `(Σ |c|²)^{1/2}`.
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest modulus on the `M × M` grid.
    pub fn sup_norm(&self, m: usize) -> f64 {
        self.to_grid(m).iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// JSON header line `{"N":…,"real_flag":…}`, then `(2N+1)²` little-endian
    /// `f64` (re, im) pairs row-major over `(m, n)`.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let header = serde_json::to_string(&Header { n: self.n_modes, real_flag: self.real })?;
        w.write_all(header.as_bytes())?;
        w.write_all(b"\n")?;
        let mut buf = Vec::with_capacity(16 * self.coeffs.len());
        for c in &self.coeffs {
            buf.extend_from_slice(&c.re.to_le_bytes());
            buf.extend_from_slice(&c.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    /// Parse the form written by [`TorusField::write_to`].
    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut rd = std::io::BufReader::new(r);
        let mut line = String::new();
        rd.read_line(&mut line)?;
        let header: Header =
            serde_json::from_str(line.trim_end()).map_err(|e| Error::Format(format!("bad header: {e}")))?;
        let mut body = Vec::new();
        rd.read_to_end(&mut body)?;
        let w = 2 * header.n + 1;
        if body.len() != 16 * w * w {
            return Err(Error::Format(format!("{} payload bytes, expected {}", body.len(), 16 * w * w)));
        }
        let coeffs = body
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                    f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
                )
            })
            .collect();
        Self::new(header.n, coeffs, header.real_flag).map_err(|e| Error::Format(e.to_string()))
    }
}

thread_local! {
    static PLANS: RefCell<HashMap<usize, Rc<Fft2>>> = RefCell::new(HashMap::new());
}

/// Per-thread cached plan for `m × m` grids.
fn plan(m: usize) -> Rc<Fft2> {
    PLANS.with(|p| p.borrow_mut().entry(m).or_insert_with(|| Rc::new(Fft2::new(m))).clone())
}

/// FFT slot of wavenumber `k` on `m` points.
pub(crate) fn wrap(k: i64, m: usize) -> usize {
    k.rem_euclid(m as i64) as usize
}

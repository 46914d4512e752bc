//! Complex linear-algebra primitives and deterministic random streams.
//!
//! Everything downstream draws randomness from [`SimRng`]. A stream is keyed by a
//! 32-byte key; child streams are derived by hashing `(parent key, label)`, so the
//! child never depends on how many values the parent has already produced. That is
//! what lets Monte Carlo runs and per-reference-point draws execute in any order
//! (or in parallel) and still reproduce bit-for-bit.

use std::fmt;
use std::ops::{Add, Mul};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use num_complex::Complex64 as Complex;

/// Dense complex column vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVector(Vec<Complex>);

impl ComplexVector {
    pub fn new(entries: Vec<Complex>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::domain("vector must have at least one entry"));
        }
        Ok(Self(entries))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![Complex::new(0.0, 0.0); len.max(1)])
    }

    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> Complex) -> Self {
        Self((0..len.max(1)).map(&mut f).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Complex> {
        self.0.iter()
    }

    /// Sum of all entries, i.e. the product with the all-ones vector.
    pub fn sum(&self) -> Complex {
        self.0.iter().sum()
    }

    /// Unconjugated bilinear product `Σ a_i b_i`.
    pub fn dot(&self, other: &ComplexVector) -> Result<Complex> {
        if self.len() != other.len() {
            return Err(Error::dim(self.len(), other.len(), "vector dot"));
        }
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum())
    }

    pub fn scale(&self, s: Complex) -> ComplexVector {
        Self(self.0.iter().map(|x| x * s).collect())
    }

    pub fn squared_norm(&self) -> f64 {
        self.0.iter().map(|x| x.norm_sqr()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }
}

impl std::ops::Index<usize> for ComplexVector {
    type Output = Complex;

    fn index(&self, i: usize) -> &Complex {
        &self.0[i]
    }
}

impl Add for &ComplexVector {
    type Output = Result<ComplexVector>;

    fn add(self, rhs: &ComplexVector) -> Result<ComplexVector> {
        if self.len() != rhs.len() {
            return Err(Error::dim(self.len(), rhs.len(), "vector add"));
        }
        Ok(ComplexVector(
            self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect(),
        ))
    }
}

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::domain("matrix dimensions must be positive"));
        }
        if data.len() != rows * cols {
            return Err(Error::dim(rows * cols, data.len(), "matrix entries"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex) -> Self {
        let rows = rows.max(1);
        let cols = cols.max(1);
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| {
            if r == c {
                Complex::new(1.0, 0.0)
            } else {
                Complex::new(0.0, 0.0)
            }
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Complex {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[Complex] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Row sums, i.e. the product with the all-ones vector.
    pub fn row_sums(&self) -> ComplexVector {
        ComplexVector((0..self.rows).map(|r| self.row(r).iter().sum()).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|x| x.re.is_finite() && x.im.is_finite())
    }
}

/// Complex matrix-vector product `m · v`.
pub fn matvec(m: &ComplexMatrix, v: &ComplexVector) -> Result<ComplexVector> {
    if m.cols != v.len() {
        return Err(Error::dim(m.cols, v.len(), "matvec inner dimension"));
    }
    Ok(ComplexVector(
        (0..m.rows)
            .map(|r| m.row(r).iter().zip(v.iter()).map(|(a, b)| a * b).sum())
            .collect(),
    ))
}

impl Mul<&ComplexVector> for &ComplexMatrix {
    type Output = Result<ComplexVector>;

    fn mul(self, rhs: &ComplexVector) -> Result<ComplexVector> {
        matvec(self, rhs)
    }
}

/// Seeded, splittable random stream (ChaCha20 keyed by a SHA-256 derived key).
#[derive(Clone)]
pub struct SimRng {
    key: [u8; 32],
    inner: ChaCha20Rng,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(b"risfocus/root");
        hasher.update(seed.to_le_bytes());
        Self::from_key(hasher.finalize().into())
    }

    fn from_key(key: [u8; 32]) -> Self {
        Self {
            key,
            inner: ChaCha20Rng::from_seed(key),
        }
    }

    /// Independent stream for `label`. Depends only on this stream's key, never on
    /// how far it has advanced.
    pub fn child(&self, label: &str) -> SimRng {
        let mut hasher = Sha256::new();
        hasher.update(self.key);
        hasher.update((label.len() as u64).to_le_bytes());
        hasher.update(label.as_bytes());
        Self::from_key(hasher.finalize().into())
    }

    pub fn indexed(&self, label: &str, index: u64) -> SimRng {
        self.child(&format!("{label}#{index}"))
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.inner.random::<f64>()
    }
}

impl fmt::Debug for SimRng {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SimRng")
            .field("key", &hex::encode(&self.key[..8]))
            .finish_non_exhaustive()
    }
}

impl RngCore for SimRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Draw from the circularly symmetric complex Gaussian `CN(0, variance)`.
pub fn cgauss_sample(rng: &mut SimRng, variance: f64) -> Result<Complex> {
    if !(variance >= 0.0) || !variance.is_finite() {
        return Err(Error::domain(format!(
            "complex Gaussian variance must be finite and >= 0, got {variance}"
        )));
    }
    let s = (variance / 2.0).sqrt();
    let re = rng.standard_normal();
    let im = rng.standard_normal();
    Ok(Complex::new(s * re, s * im))
}

/// Wrap an angle into `[-π, π)`.
pub fn wrap_phase(phi: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let w = phi - TAU * ((phi + PI) / TAU).floor();
    if w >= PI {
        w - TAU
    } else if w < -PI {
        -PI
    } else {
        w
    }
}

/// Lossless decimal rendering of an `f64` (17 significant digits).
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

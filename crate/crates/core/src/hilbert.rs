//! Complex Hilbert-space primitives and the realification calculus.
//!
//! `H = ℂⁿ` carries the inner product `⟨x, y⟩ = Σ x_j conj(y_j)` (linear in the
//! first argument) and entrywise conjugation. The realification
//! `ι(x) = (Re x | Im x)` is an ℝ-linear isometry onto `H_ℝ = ℝ²ⁿ`, and
//! `J(v, w) = (−w, v)` represents multiplication by `i`.

use std::ops::{Add, Index, Neg, Sub};

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{check_dim, Error, Result};

/// Element of `H ≅ ℂⁿ`. Entries are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector(DVector<Complex64>);

/// Element of `H_ℝ ≅ ℝ²ⁿ` in the layout `(real parts | imaginary parts)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealifiedVector(DVector<f64>);

impl ComplexVector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        Self::from_dvector(DVector::from_vec(entries))
    }

    pub fn from_dvector(v: DVector<Complex64>) -> Result<Self> {
        if let Some(i) = v.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self(v))
    }

    /// Builds from a generator; the caller guarantees finite output.
    pub(crate) fn from_fn(n: usize, mut f: impl FnMut(usize) -> Complex64) -> Self {
        let v = DVector::from_fn(n, |i, _| f(i));
        debug_assert!(v.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        Self(v)
    }

    pub(crate) fn from_dvector_unchecked(v: DVector<Complex64>) -> Self {
        Self(v)
    }

    /// Real-valued entries, convenient for tests and examples.
    pub fn from_reals(entries: &[f64]) -> Result<Self> {
        Self::new(entries.iter().map(|&r| Complex64::new(r, 0.0)).collect())
    }

    pub fn zeros(n: usize) -> Self {
        Self(DVector::zeros(n))
    }

    /// Standard basis vector `e_j`.
    pub fn basis(n: usize, j: usize) -> Self {
        let mut v = DVector::zeros(n);
        v[j] = Complex64::new(1.0, 0.0);
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        self.0.as_slice()
    }

    pub fn as_dvector(&self) -> &DVector<Complex64> {
        &self.0
    }

    pub fn into_dvector(self) -> DVector<Complex64> {
        self.0
    }

    pub fn norm_squared(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn scale(&self, a: f64) -> Self {
        Self(self.0.map(|z| z * a))
    }

    pub fn scale_complex(&self, a: Complex64) -> Self {
        Self(self.0.map(|z| z * a))
    }

    /// Multiplies by the unit scalar `e^{iφ}`.
    pub fn rotate_phase(&self, phi: f64) -> Self {
        self.scale_complex(Complex64::from_polar(1.0, phi))
    }

    /// `⟨self, other⟩`, linear in `self` and antilinear in `other`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        check_dim(self.dim(), other.dim())?;
        Ok(inner_unchecked(&self.0, &other.0))
    }

    /// Real linear combination `a·self + b·other`.
    pub fn lin_comb(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self(self.0.map(|z| z * a) + other.0.map(|z| z * b)))
    }

    /// Complex linear combination `a·self + b·other`.
    pub fn complex_lin_comb(&self, a: Complex64, other: &Self, b: Complex64) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self(self.0.map(|z| z * a) + other.0.map(|z| z * b)))
    }

    /// Rotates the global phase so that the largest-magnitude entry is real
    /// and positive. Ties resolve to the lowest index.
    pub fn with_canonical_phase(&self) -> Self {
        Self(canonical_phase(self.0.clone()))
    }
}

pub(crate) fn inner_unchecked(x: &DVector<Complex64>, y: &DVector<Complex64>) -> Complex64 {
    x.iter().zip(y.iter()).map(|(a, b)| a * b.conj()).sum()
}

pub(crate) fn canonical_phase(mut v: DVector<Complex64>) -> DVector<Complex64> {
    let mut best = 0usize;
    let mut best_mag = -1.0;
    for (i, z) in v.iter().enumerate() {
        let mag = z.norm();
        // relative slack keeps the pivot stable under roundoff
        if mag > best_mag * (1.0 + 1e-12) {
            best = i;
            best_mag = mag;
        }
    }
    if best_mag > 0.0 {
        let rot = v[best].conj() / best_mag;
        v.apply(|z| *z *= rot);
        v[best] = Complex64::new(v[best].re, 0.0);
    }
    v
}

impl Index<usize> for ComplexVector {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

impl Neg for &ComplexVector {
    type Output = ComplexVector;
    fn neg(self) -> ComplexVector {
        ComplexVector(-&self.0)
    }
}

/// Panics on dimension mismatch, like the underlying nalgebra operators.
impl Add for &ComplexVector {
    type Output = ComplexVector;
    fn add(self, rhs: Self) -> ComplexVector {
        ComplexVector(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexVector {
    type Output = ComplexVector;
    fn sub(self, rhs: Self) -> ComplexVector {
        ComplexVector(&self.0 - &rhs.0)
    }
}

impl RealifiedVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        Self::from_dvector(DVector::from_vec(entries))
    }

    pub fn from_dvector(v: DVector<f64>) -> Result<Self> {
        if !v.len().is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "realified vectors have even length, got {}",
                v.len()
            )));
        }
        if let Some(i) = v.iter().position(|r| !r.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self(v))
    }

    pub(crate) fn from_dvector_unchecked(v: DVector<f64>) -> Self {
        debug_assert!(v.len().is_multiple_of(2));
        Self(v)
    }

    pub fn zeros(n: usize) -> Self {
        Self(DVector::zeros(2 * n))
    }

    /// Complex dimension `n` of the underlying space (half the length).
    pub fn complex_dim(&self) -> usize {
        self.0.len() / 2
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn as_dvector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_dvector(self) -> DVector<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn dot(&self, other: &Self) -> Result<f64> {
        check_dim(self.len(), other.len())?;
        Ok(self.0.dot(&other.0))
    }

    pub fn scale(&self, a: f64) -> Self {
        Self(&self.0 * a)
    }

    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0).then(|| self.scale(1.0 / n))
    }
}

impl Index<usize> for RealifiedVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// `ι(x) = (Re x | Im x)`.
pub fn iota(x: &ComplexVector) -> RealifiedVector {
    RealifiedVector(iota_dv(&x.0))
}

pub(crate) fn iota_dv(x: &DVector<Complex64>) -> DVector<f64> {
    let n = x.len();
    DVector::from_fn(2 * n, |i, _| if i < n { x[i].re } else { x[i - n].im })
}

/// `ι⁻¹(u, v) = u + iv`.
pub fn iota_inv(xi: &RealifiedVector) -> ComplexVector {
    ComplexVector(iota_inv_dv(&xi.0))
}

pub(crate) fn iota_inv_dv(xi: &DVector<f64>) -> DVector<Complex64> {
    let n = xi.len() / 2;
    DVector::from_fn(n, |i, _| Complex64::new(xi[i], xi[i + n]))
}

/// `J(v, w) = (−w, v)`.
pub fn apply_j(xi: &RealifiedVector) -> RealifiedVector {
    RealifiedVector(apply_j_dv(&xi.0))
}

pub(crate) fn apply_j_dv(xi: &DVector<f64>) -> DVector<f64> {
    let n = xi.len() / 2;
    DVector::from_fn(2 * n, |i, _| if i < n { -xi[i + n] } else { xi[i - n] })
}

/// `Re⟨x, y⟩ = ⟨ι(x), ι(y)⟩`.
pub fn real_inner(x: &ComplexVector, y: &ComplexVector) -> Result<f64> {
    Ok(x.inner(y)?.re)
}

/// `Im⟨x, y⟩ = ⟨ι(x), J ι(y)⟩`.
pub fn imag_inner(x: &ComplexVector, y: &ComplexVector) -> Result<f64> {
    Ok(x.inner(y)?.im)
}

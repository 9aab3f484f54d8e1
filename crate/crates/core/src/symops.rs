//! Self-adjoint operators on `H` and `H_ℝ`.
//!
//! Covers rank-one and symmetric outer products, membership in the cones
//! `S^{p,q}` (at most `p` positive and `q` negative eigenvalues), the spectral
//! factorisation of `S^{1,1}`, the embedding `τ : Sym(H) → Sym(H_ℝ)`, Schatten
//! norms, and the indefinite unitary group `U(1,1;K)` that parametrises the
//! non-uniqueness of `T = u∘v`.

use std::ops::{Add, Sub};

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen, Vector2};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::hilbert::{canonical_phase, inner_unchecked, ComplexVector};

/// Relative tolerance used to decide whether an operator lies in `S^{1,1}`.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

const HERMITIAN_TOL: f64 = 1e-12;

/// Self-adjoint `n×n` complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymOperator(DMatrix<Complex64>);

/// Symmetric `2n×2n` real matrix acting on `H_ℝ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSymOperator(DMatrix<f64>);

/// Eigenvalues sorted in decreasing order with matching unit eigenvectors
/// (columns), each rotated to the canonical phase.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

#[derive(Debug, Clone)]
pub struct RealEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Inertia counts of an operator at an absolute threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Signature {
    pub p: usize,
    pub q: usize,
    pub tol: f64,
}

impl Signature {
    /// True if the operator lies in `S^{p,q}` at this tolerance.
    pub fn within(&self, p: usize, q: usize) -> bool {
        self.p <= p && self.q <= q
    }
}

/// `T = a₊·e1e1* + a₋·e2e2*` with `a₊ ≥ 0 ≥ a₋` and orthonormal `e1, e2`.
#[derive(Debug, Clone)]
pub struct S11Decomposition {
    pub a_plus: f64,
    pub a_minus: f64,
    pub e1: ComplexVector,
    pub e2: ComplexVector,
}

impl S11Decomposition {
    pub fn nuclear_norm(&self) -> f64 {
        self.a_plus - self.a_minus
    }

    pub fn trace(&self) -> f64 {
        self.a_plus + self.a_minus
    }

    pub fn reconstruct(&self) -> SymOperator {
        let p = rank_one(&self.e1).0 * Complex64::new(self.a_plus, 0.0);
        let q = rank_one(&self.e2).0 * Complex64::new(self.a_minus, 0.0);
        SymOperator(p + q)
    }

    /// The particular factorisation `u0 = √a₁ e1 + √a₂ e2`,
    /// `v0 = √a₁ e1 − √a₂ e2` with `a₁ = a₊`, `a₂ = −a₋`.
    pub fn factor(&self) -> (ComplexVector, ComplexVector) {
        let s1 = self.a_plus.max(0.0).sqrt();
        let s2 = (-self.a_minus).max(0.0).sqrt();
        let e1 = self.e1.as_dvector();
        let e2 = self.e2.as_dvector();
        let u0 = e1 * Complex64::new(s1, 0.0) + e2 * Complex64::new(s2, 0.0);
        let v0 = e1 * Complex64::new(s1, 0.0) - e2 * Complex64::new(s2, 0.0);
        (
            ComplexVector::from_dvector_unchecked(u0),
            ComplexVector::from_dvector_unchecked(v0),
        )
    }
}

impl SymOperator {
    /// Accepts a matrix that is Hermitian up to `1e-12·‖M‖_F` and returns its
    /// exact Hermitian part.
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidArgument(format!(
                "operator must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if let Some(i) = m.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let adj = m.adjoint();
        let asym = (&m - &adj).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let scale = m.norm();
        if asym > HERMITIAN_TOL * scale {
            return Err(Error::InvalidArgument(format!(
                "matrix is not Hermitian (max |M - M*| = {asym:e})"
            )));
        }
        Ok(Self((m + adj) * Complex64::new(0.5, 0.0)))
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<Complex64>) -> Self {
        Self(m)
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    /// Diagonal operator with the given real entries.
    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(d[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn scale(&self, a: f64) -> Self {
        Self(&self.0 * Complex64::new(a, 0.0))
    }

    /// Hilbert-Schmidt product `tr{T S*} = tr{T S}`.
    pub fn hs_inner(&self, other: &Self) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self
            .0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a * b.conj()).re)
            .sum())
    }

    pub fn apply(&self, x: &ComplexVector) -> Result<ComplexVector> {
        check_dim(self.dim(), x.dim())?;
        Ok(ComplexVector::from_dvector_unchecked(&self.0 * x.as_dvector()))
    }

    /// `⟨T x, x⟩`, always real.
    pub fn quadratic_form(&self, x: &ComplexVector) -> Result<f64> {
        check_dim(self.dim(), x.dim())?;
        Ok(inner_unchecked(&(&self.0 * x.as_dvector()), x.as_dvector()).re)
    }

    /// `A T A*` for an arbitrary square `A`.
    pub fn congruence(&self, a: &DMatrix<Complex64>) -> Result<Self> {
        check_dim(self.dim(), a.ncols())?;
        let m = a * &self.0 * a.adjoint();
        Ok(Self((&m + m.adjoint()) * Complex64::new(0.5, 0.0)))
    }

    pub fn eigen(&self) -> HermitianEigen {
        hermitian_eigen(&self.0)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut vals: Vec<f64> = SymmetricEigen::new(self.0.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        vals
    }

    /// Schatten `p`-norm; `p = f64::INFINITY` gives the operator norm.
    pub fn schatten_norm(&self, p: f64) -> f64 {
        schatten(&self.eigenvalues(), p)
    }

    pub fn nuclear_norm(&self) -> f64 {
        self.schatten_norm(1.0)
    }

    pub fn operator_norm(&self) -> f64 {
        self.schatten_norm(f64::INFINITY)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }
}

impl Add for &SymOperator {
    type Output = SymOperator;
    fn add(self, rhs: Self) -> SymOperator {
        SymOperator(&self.0 + &rhs.0)
    }
}

impl Sub for &SymOperator {
    type Output = SymOperator;
    fn sub(self, rhs: Self) -> SymOperator {
        SymOperator(&self.0 - &rhs.0)
    }
}

impl RealSymOperator {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidArgument(format!(
                "operator must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if let Some(i) = m.iter().position(|r| !r.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let t = m.transpose();
        let asym = (&m - &t).amax();
        if asym > HERMITIAN_TOL * m.norm() {
            return Err(Error::InvalidArgument(format!(
                "matrix is not symmetric (max |M - Mᵀ| = {asym:e})"
            )));
        }
        Ok(Self((m + t) * 0.5))
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<f64>) -> Self {
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn scale(&self, a: f64) -> Self {
        Self(&self.0 * a)
    }

    pub fn hs_inner(&self, other: &Self) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.0.dot(&other.0))
    }

    pub fn apply(&self, xi: &DVector<f64>) -> DVector<f64> {
        &self.0 * xi
    }

    pub fn eigen(&self) -> RealEigen {
        real_symmetric_eigen(&self.0)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut vals: Vec<f64> = SymmetricEigen::new(self.0.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        vals
    }

    pub fn schatten_norm(&self, p: f64) -> f64 {
        schatten(&self.eigenvalues(), p)
    }
}

pub(crate) fn schatten(eigs: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        eigs.iter().fold(0.0, |m, v| m.max(v.abs()))
    } else if p == 1.0 {
        eigs.iter().map(|v| v.abs()).sum()
    } else {
        eigs.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// Eigendecomposition of a Hermitian matrix, sorted decreasingly.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> HermitianEigen {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = canonical_phase(eig.eigenvectors.column(src).into_owned());
        vectors.set_column(dst, &col);
    }
    HermitianEigen { values, vectors }
}

/// Eigendecomposition of a real symmetric matrix, sorted decreasingly. The
/// largest-magnitude entry of each eigenvector is made positive.
pub fn real_symmetric_eigen(m: &DMatrix<f64>) -> RealEigen {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        let pivot = col.iamax();
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
        vectors.set_column(dst, &col);
    }
    RealEigen { values, vectors }
}

/// `xx*`.
pub fn rank_one(x: &ComplexVector) -> SymOperator {
    let v = x.as_dvector();
    SymOperator(v * v.adjoint())
}

/// Symmetric outer product `u∘v = (uv* + vu*)/2`.
pub fn sym_outer(u: &ComplexVector, v: &ComplexVector) -> Result<SymOperator> {
    check_dim(u.dim(), v.dim())?;
    Ok(SymOperator(sym_outer_dm(u.as_dvector(), v.as_dvector())))
}

pub(crate) fn sym_outer_dm(u: &DVector<Complex64>, v: &DVector<Complex64>) -> DMatrix<Complex64> {
    let uv = u * v.adjoint();
    (&uv + uv.adjoint()) * Complex64::new(0.5, 0.0)
}

/// `tr{u∘v} = ⟨u, v⟩_ℝ`.
pub fn trace_outer(u: &ComplexVector, v: &ComplexVector) -> Result<f64> {
    Ok(u.inner(v)?.re)
}

/// `tr{(u∘v)²} = ½(‖u‖²‖v‖² + ⟨u,v⟩_ℝ² − ⟨iu,v⟩_ℝ²)`.
pub fn trace_outer_squared(u: &ComplexVector, v: &ComplexVector) -> Result<f64> {
    let g = u.inner(v)?;
    Ok(0.5 * (u.norm_squared() * v.norm_squared() + g.re * g.re - g.im * g.im))
}

/// `‖u∘v‖₁ = √(‖u‖²‖v‖² − ⟨iu,v⟩_ℝ²)`, computed without forming the matrix.
pub fn nuclear_norm_outer(u: &ComplexVector, v: &ComplexVector) -> Result<f64> {
    let g = u.inner(v)?;
    Ok((u.norm_squared() * v.norm_squared() - g.im * g.im)
        .max(0.0)
        .sqrt())
}

/// `‖xx* − yy*‖₁ = √((‖x‖² + ‖y‖²)² − 4|⟨x,y⟩|²)`, computed without forming
/// the matrix.
pub fn nuclear_norm_pair(x: &ComplexVector, y: &ComplexVector) -> Result<f64> {
    let g = x.inner(y)?;
    Ok(nuclear_norm_pair_raw(
        x.norm_squared(),
        y.norm_squared(),
        g.norm_sqr(),
    ))
}

pub(crate) fn nuclear_norm_pair_raw(nx2: f64, ny2: f64, g2: f64) -> f64 {
    let s = nx2 + ny2;
    (s * s - 4.0 * g2).max(0.0).sqrt()
}

/// Counts eigenvalues above `tol` and below `−tol`.
pub fn signature(t: &SymOperator, tol: f64) -> Signature {
    let vals = t.eigenvalues();
    Signature {
        p: vals.iter().filter(|&&v| v > tol).count(),
        q: vals.iter().filter(|&&v| v < -tol).count(),
        tol,
    }
}

/// Spectral decomposition of a dense operator in `S^{1,1}`.
///
/// Rejects operators whose third-largest eigenvalue magnitude exceeds
/// `DEFAULT_RANK_TOL·‖T‖`.
pub fn s11_spectral(t: &SymOperator) -> Result<S11Decomposition> {
    s11_spectral_with_tol(t, DEFAULT_RANK_TOL)
}

pub fn s11_spectral_with_tol(t: &SymOperator, rel_tol: f64) -> Result<S11Decomposition> {
    let n = t.dim();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "S^{1,1} decomposition needs dimension at least 2".into(),
        ));
    }
    let eig = t.eigen();
    let norm = schatten(&eig.values, f64::INFINITY);
    let mut mags: Vec<f64> = eig.values.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let third = mags.get(2).copied().unwrap_or(0.0);
    let tol = rel_tol * norm;
    if third > tol {
        return Err(Error::NotInS11 { third, tol });
    }
    let col = |j: usize| ComplexVector::from_dvector_unchecked(eig.vectors.column(j).into_owned());
    // eigenvalues at the rank tolerance are numerical zeros
    let clip = |v: f64| if v.abs() <= tol { 0.0 } else { v };
    Ok(S11Decomposition {
        a_plus: clip(eig.values[0].max(0.0)),
        a_minus: clip(eig.values[n - 1].min(0.0)),
        e1: col(0),
        e2: col(n - 1),
    })
}

/// Spectral decomposition of `u∘v` from its factors, working on the 2×2
/// restriction to `span{u, v}`. Costs O(n).
pub fn s11_spectral_factored(u: &ComplexVector, v: &ComplexVector) -> Result<S11Decomposition> {
    check_dim(u.dim(), v.dim())?;
    let n = u.dim();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "S^{1,1} decomposition needs dimension at least 2".into(),
        ));
    }
    let (uu, vv) = (u.as_dvector(), v.as_dvector());
    let g = inner_unchecked(uu, vv);
    let nu2 = u.norm_squared();
    let nv2 = v.norm_squared();
    let root = (nu2 * nv2 - g.im * g.im).max(0.0).sqrt();
    let a_plus = (0.5 * (g.re + root)).max(0.0);
    let a_minus = (0.5 * (g.re - root)).min(0.0);

    let (q1, q2) = orthonormal_pair(uu, vv);
    // T q = ½(⟨q,v⟩u + ⟨q,u⟩v)
    let apply = |q: &DVector<Complex64>| -> DVector<Complex64> {
        uu * (inner_unchecked(q, vv) * 0.5) + vv * (inner_unchecked(q, uu) * 0.5)
    };
    let t1 = apply(&q1);
    let t2 = apply(&q2);
    let h11 = inner_unchecked(&t1, &q1).re;
    let h22 = inner_unchecked(&t2, &q2).re;
    let h12 = inner_unchecked(&t2, &q1);
    let (w_plus, w_minus) = eigvecs_2x2(h11, h12, h22);
    let e1 = &q1 * w_plus[0] + &q2 * w_plus[1];
    let e2 = &q1 * w_minus[0] + &q2 * w_minus[1];
    Ok(S11Decomposition {
        a_plus,
        a_minus,
        e1: ComplexVector::from_dvector_unchecked(canonical_phase(e1)),
        e2: ComplexVector::from_dvector_unchecked(canonical_phase(e2)),
    })
}

/// Orthonormal pair spanning `span{u, v}`, completed with a standard basis
/// direction when the span has dimension below two.
fn orthonormal_pair(
    u: &DVector<Complex64>,
    v: &DVector<Complex64>,
) -> (DVector<Complex64>, DVector<Complex64>) {
    let n = u.len();
    let scale = u.norm().max(v.norm());
    let eps = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let (first, second) = if u.norm() >= v.norm() { (u, v) } else { (v, u) };
    let q1 = if first.norm() > eps {
        first / Complex64::new(first.norm(), 0.0)
    } else {
        let mut e = DVector::zeros(n);
        e[0] = Complex64::new(1.0, 0.0);
        e
    };
    let project_out = |w: &DVector<Complex64>| w - &q1 * inner_unchecked(w, &q1);
    let r = project_out(second);
    if r.norm() > 1e-10 * scale {
        let q2 = &r / Complex64::new(r.norm(), 0.0);
        return (q1, q2);
    }
    // least-overlapping standard basis vector
    let j = (0..n)
        .min_by(|&a, &b| q1[a].norm().total_cmp(&q1[b].norm()))
        .unwrap_or(0);
    let mut e = DVector::zeros(n);
    e[j] = Complex64::new(1.0, 0.0);
    let r = project_out(&e);
    let q2 = &r / Complex64::new(r.norm(), 0.0);
    (q1, q2)
}

/// Unit eigenvectors (largest eigenvalue first) of `[[a, b], [b̄, d]]`.
fn eigvecs_2x2(a: f64, b: Complex64, d: f64) -> (Vector2<Complex64>, Vector2<Complex64>) {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let scale = a.abs().max(d.abs()).max(b.norm());
    if b.norm() <= 1e-15 * scale || scale == 0.0 {
        return if a >= d {
            (Vector2::new(one, zero), Vector2::new(zero, one))
        } else {
            (Vector2::new(zero, one), Vector2::new(one, zero))
        };
    }
    let mean = 0.5 * (a + d);
    let half_gap = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    let l1 = mean + half_gap;
    // (b, λ−a) and (λ−d, b̄) both solve (M − λ)w = 0; take the better conditioned
    let v1 = {
        let c1 = Vector2::new(b, Complex64::new(l1 - a, 0.0));
        let c2 = Vector2::new(Complex64::new(l1 - d, 0.0), b.conj());
        let c = if c1.norm() >= c2.norm() { c1 } else { c2 };
        c / Complex64::new(c.norm(), 0.0)
    };
    // orthogonal complement in ℂ²
    let v2 = Vector2::new(-v1[1].conj(), v1[0].conj());
    (v1, v2)
}

/// Particular factorisation `T = u0∘v0` of an operator in `S^{1,1}`.
pub fn s11_factor(t: &SymOperator) -> Result<(ComplexVector, ComplexVector)> {
    Ok(s11_spectral(t)?.factor())
}

/// `τ(T)`: the real `2n×2n` matrix of `ι∘T∘ι⁻¹`. For `T = A + iB`,
/// `τ(T) = [[A, −B], [B, A]]`.
pub fn tau(t: &SymOperator) -> RealSymOperator {
    let n = t.dim();
    let m = &t.0;
    RealSymOperator(DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let (bi, ri) = (i / n, i % n);
        let (bj, rj) = (j / n, j % n);
        let z = m[(ri, rj)];
        match (bi, bj) {
            (0, 0) | (1, 1) => z.re,
            (0, 1) => -z.im,
            _ => z.im,
        }
    }))
}

/// `K = [[0, 1], [1, 0]]`.
pub fn k_form() -> Matrix2<Complex64> {
    let (o, z) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    Matrix2::new(z, o, o, z)
}

/// `D = diag(1, −1)`.
pub fn d_form() -> Matrix2<Complex64> {
    let (o, z) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    Matrix2::new(o, z, z, -o)
}

/// `V = [[1, 1], [−1, 1]]/√2`, mapping `U(1,1;K)` onto `U(1,1)` by `A ↦ VAV*`.
pub fn v_equivalence() -> Matrix2<Complex64> {
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    Matrix2::new(s, s, -s, s)
}

/// Coordinates on `U(1,1)`: `B = diag(e^{iθ₁}, e^{iθ₂})·[[cosh t, sinh t], [sinh t, cosh t]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct U11Params {
    pub rapidity: f64,
    pub theta1: f64,
    pub theta2: f64,
}

impl U11Params {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, max_rapidity: f64) -> Self {
        let tau = std::f64::consts::TAU;
        Self {
            rapidity: rng.random_range(-max_rapidity..=max_rapidity),
            theta1: rng.random_range(0.0..tau),
            theta2: rng.random_range(0.0..tau),
        }
    }
}

pub fn u11_element(p: &U11Params) -> Matrix2<Complex64> {
    let (c, s) = (p.rapidity.cosh(), p.rapidity.sinh());
    let z = Complex64::new(0.0, 0.0);
    let phases = Matrix2::new(
        Complex64::from_polar(1.0, p.theta1),
        z,
        z,
        Complex64::from_polar(1.0, p.theta2),
    );
    let boost = Matrix2::new(
        Complex64::new(c, 0.0),
        Complex64::new(s, 0.0),
        Complex64::new(s, 0.0),
        Complex64::new(c, 0.0),
    );
    phases * boost
}

/// `A = V* B V ∈ U(1,1;K)`, so `A*KA = K`.
pub fn u11k_element(p: &U11Params) -> Matrix2<Complex64> {
    let v = v_equivalence();
    v.adjoint() * u11_element(p) * v
}

/// Draws a random element of `U(1,1;K)` with `|t| ≤ max_rapidity`.
pub fn sample_u11k<R: Rng + ?Sized>(rng: &mut R, max_rapidity: f64) -> Matrix2<Complex64> {
    u11k_element(&U11Params::sample(rng, max_rapidity))
}

/// `(u, v) = (a₁₁u0 + a₁₂v0, a₂₁u0 + a₂₂v0)`.
pub fn transform_pair(
    a: &Matrix2<Complex64>,
    u0: &ComplexVector,
    v0: &ComplexVector,
) -> Result<(ComplexVector, ComplexVector)> {
    Ok((
        u0.complex_lin_comb(a[(0, 0)], v0, a[(0, 1)])?,
        u0.complex_lin_comb(a[(1, 0)], v0, a[(1, 1)])?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::iota;
    use crate::rng::{complex_gaussian_vector, stream_rng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn max_abs(m: &DMatrix<Complex64>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn random_hermitian<R: Rng>(rng: &mut R, n: usize) -> SymOperator {
        let a = DMatrix::from_fn(n, n, |_, _| crate::rng::complex_normal(rng));
        SymOperator::new((&a + a.adjoint()) * c(0.5, 0.0)).unwrap()
    }

    #[test]
    fn rank_one_examples() {
        let e1 = ComplexVector::basis(2, 0);
        let r = rank_one(&e1);
        assert_eq!(r.matrix()[(0, 0)], c(1.0, 0.0));
        assert_eq!(
            max_abs(
                &(r.matrix()
                    - DMatrix::from_fn(2, 2, |i, j| {
                        if i == 0 && j == 0 {
                            c(1.0, 0.0)
                        } else {
                            c(0.0, 0.0)
                        }
                    }))
            ),
            0.0
        );
        assert_eq!(max_abs(rank_one(&ComplexVector::zeros(3)).matrix()), 0.0);
        let x = ComplexVector::new(vec![c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        let r = rank_one(&x);
        assert_eq!(r.matrix()[(0, 1)], c(0.0, -1.0));
        assert_eq!(r.matrix()[(1, 0)], c(0.0, 1.0));
        assert_eq!(r.matrix()[(1, 1)], c(1.0, 0.0));
        assert!((r.trace() - x.norm_squared()).abs() < 1e-15);
    }

    #[test]
    fn sym_outer_examples() {
        let e1 = ComplexVector::basis(2, 0);
        assert_eq!(sym_outer(&e1, &e1).unwrap(), rank_one(&e1));
        let u = ComplexVector::new(vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let v = ComplexVector::new(vec![c(0.0, 1.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(max_abs(sym_outer(&u, &v).unwrap().matrix()), 0.0);
        assert!(sym_outer(&u, &ComplexVector::zeros(3)).is_err());

        let mut rng = stream_rng(11, 0);
        for _ in 0..50 {
            let u = complex_gaussian_vector(&mut rng, 5);
            let v = complex_gaussian_vector(&mut rng, 5);
            let t = sym_outer(&u, &v).unwrap();
            let direct: Complex64 = (0..5).map(|j| u[j] * v[j].conj()).sum();
            assert!((t.trace() - direct.re).abs() < 1e-12);
            assert_eq!(t, sym_outer(&v, &u).unwrap());
        }
    }

    #[test]
    fn s11_spectral_examples() {
        let e1 = ComplexVector::basis(4, 0);
        let e2 = ComplexVector::basis(4, 1);
        let t = sym_outer(&e1, &e2).unwrap();
        for d in [
            s11_spectral(&t).unwrap(),
            s11_spectral_factored(&e1, &e2).unwrap(),
        ] {
            assert!((d.a_plus - 0.5).abs() < 1e-14);
            assert!((d.a_minus + 0.5).abs() < 1e-14);
        }
        let x = ComplexVector::new(vec![c(1.0, 2.0), c(-0.5, 0.0), c(0.0, 1.0)]).unwrap();
        for d in [
            s11_spectral(&rank_one(&x)).unwrap(),
            s11_spectral_factored(&x, &x).unwrap(),
        ] {
            assert!((d.a_plus - x.norm_squared()).abs() < 1e-12);
            assert!(d.a_minus.abs() < 1e-12);
        }
    }

    #[test]
    fn s11_spectral_matches_dense_eigensolver() {
        let mut rng = stream_rng(12, 0);
        for _ in 0..50 {
            let u = complex_gaussian_vector(&mut rng, 6);
            let v = complex_gaussian_vector(&mut rng, 6);
            let t = sym_outer(&u, &v).unwrap();
            let vals = t.eigenvalues();
            let d = s11_spectral_factored(&u, &v).unwrap();
            assert!((d.a_plus - vals[0]).abs() < 1e-10);
            assert!((d.a_minus - vals[5]).abs() < 1e-10);
            assert!(d.a_plus * d.a_minus <= 0.0);
            // orthonormality and reconstruction
            assert!(d.e1.inner(&d.e2).unwrap().norm() < 1e-12);
            assert!((d.e1.norm() - 1.0).abs() < 1e-12 && (d.e2.norm() - 1.0).abs() < 1e-12);
            let scale = t.operator_norm();
            assert!(max_abs(&(d.reconstruct().matrix() - t.matrix())) <= 1e-10 * scale);
            let dd = s11_spectral(&t).unwrap();
            assert!(max_abs(&(dd.reconstruct().matrix() - t.matrix())) <= 1e-10 * scale);
        }
    }

    #[test]
    fn s11_rejects_rank_three() {
        let t = SymOperator::diagonal(&[1.0, 0.5, -1.0]);
        assert!(matches!(s11_spectral(&t), Err(Error::NotInS11 { .. })));
        assert!(s11_factor(&t).is_err());
    }

    #[test]
    fn s11_factor_examples() {
        let x = ComplexVector::new(vec![c(0.0, 2.0), c(1.0, -1.0)]).unwrap();
        let (u0, v0) = s11_factor(&rank_one(&x)).unwrap();
        assert!(((&u0 - &v0).norm()) < 1e-12);
        assert!((u0.norm() - x.norm()).abs() < 1e-12);
        // u0 is x up to a global phase
        assert!((x.inner(&u0).unwrap().norm() - x.norm_squared()).abs() < 1e-10);

        let t = SymOperator::diagonal(&[1.0, -1.0, 0.0]);
        let (u0, v0) = s11_factor(&t).unwrap();
        let exp_u = ComplexVector::from_reals(&[1.0, 1.0, 0.0]).unwrap();
        let exp_v = ComplexVector::from_reals(&[1.0, -1.0, 0.0]).unwrap();
        assert!((&u0 - &exp_u).norm() < 1e-14);
        assert!((&v0 - &exp_v).norm() < 1e-14);
    }

    #[test]
    fn s11_factor_round_trip() {
        let mut rng = stream_rng(13, 0);
        for _ in 0..50 {
            let u = complex_gaussian_vector(&mut rng, 6);
            let v = complex_gaussian_vector(&mut rng, 6);
            let t = sym_outer(&u, &v).unwrap();
            let (u0, v0) = s11_factor(&t).unwrap();
            let back = sym_outer(&u0, &v0).unwrap();
            let scale = t.operator_norm();
            assert!(max_abs(&(back.matrix() - t.matrix())) <= 1e-10 * scale);
            let nuc = t.nuclear_norm();
            assert!((u0.norm() - nuc.sqrt()).abs() < 1e-10 * (1.0 + nuc.sqrt()));
            assert!((v0.norm() - nuc.sqrt()).abs() < 1e-10 * (1.0 + nuc.sqrt()));
            let g = u0.inner(&v0).unwrap();
            assert!((g.re - t.trace()).abs() < 1e-10 * (1.0 + nuc));
            assert!(g.im.abs() < 1e-10 * (1.0 + nuc));
        }
    }

    #[test]
    fn signature_examples() {
        assert_eq!(signature(&SymOperator::identity(3), 1e-8).p, 3);
        assert_eq!(signature(&SymOperator::identity(3), 1e-8).q, 0);
        let t = sym_outer(&ComplexVector::basis(3, 0), &ComplexVector::basis(3, 1)).unwrap();
        let s = signature(&t, 1e-8);
        assert_eq!((s.p, s.q), (1, 1));
        let s = signature(&t.scale(-1.0), 1e-8);
        assert_eq!((s.p, s.q), (1, 1));
        let d = SymOperator::diagonal(&[2.0, 1.0, -1.0]);
        let s = signature(&d.scale(-1.0), 1e-8);
        assert_eq!((s.p, s.q), (1, 2));
    }

    #[test]
    fn congruence_preserves_inertia() {
        let mut rng = stream_rng(14, 0);
        for _ in 0..30 {
            let u = complex_gaussian_vector(&mut rng, 5);
            let v = complex_gaussian_vector(&mut rng, 5);
            let x = sym_outer(&u, &v).unwrap();
            let a = DMatrix::from_fn(5, 5, |_, _| crate::rng::complex_normal(&mut rng));
            let y = x.congruence(&a).unwrap();
            let tol = 1e-8 * y.operator_norm();
            let s = signature(&y, tol);
            assert_eq!((s.p, s.q), (1, 1));
        }
    }

    #[test]
    fn cone_additivity() {
        let mut rng = stream_rng(15, 0);
        for _ in 0..30 {
            let x = rank_one(&complex_gaussian_vector(&mut rng, 4));
            let y = rank_one(&complex_gaussian_vector(&mut rng, 4)).scale(-1.0);
            let sum = &x + &y;
            let s = signature(&sum, 1e-9 * sum.operator_norm());
            assert!(s.within(1, 1));
        }
    }

    #[test]
    fn tau_examples() {
        assert_eq!(
            tau(&SymOperator::identity(3)).matrix(),
            &DMatrix::<f64>::identity(6, 6)
        );
        let x = ComplexVector::new(vec![c(1.0, -2.0), c(0.3, 0.7)]).unwrap();
        let xi = iota(&x).into_dvector();
        let jxi = crate::hilbert::apply_j_dv(&xi);
        let expect = &xi * xi.transpose() + &jxi * jxi.transpose();
        assert!((tau(&rank_one(&x)).matrix() - expect).amax() < 1e-14);
    }

    #[test]
    fn tau_commutes_with_iota() {
        let mut rng = stream_rng(16, 0);
        let t = random_hermitian(&mut rng, 4);
        let x = complex_gaussian_vector(&mut rng, 4);
        let lhs = tau(&t).apply(iota(&x).as_dvector());
        let rhs = iota(&t.apply(&x).unwrap()).into_dvector();
        assert!((lhs - rhs).amax() < 1e-12);
    }

    #[test]
    fn tau_doubles_spectrum() {
        let mut rng = stream_rng(17, 0);
        for _ in 0..20 {
            let t = random_hermitian(&mut rng, 5);
            let vals = t.eigenvalues();
            let rvals = tau(&t).eigenvalues();
            for (k, v) in vals.iter().enumerate() {
                assert!((rvals[2 * k] - v).abs() < 1e-10);
                assert!((rvals[2 * k + 1] - v).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn u11k_identity_and_form() {
        let id = u11k_element(&U11Params {
            rapidity: 0.0,
            theta1: 0.0,
            theta2: 0.0,
        });
        assert!((id - Matrix2::identity()).norm() < 1e-15);
        let k = k_form();
        let mut rng = stream_rng(18, 0);
        for _ in 0..100 {
            let a = sample_u11k(&mut rng, 1.5);
            assert!((a.adjoint() * k * a - k).norm() <= 1e-12 * (1.0 + a.norm_squared()));
        }
        // V K V* = D
        let v = v_equivalence();
        assert!((v * k * v.adjoint() - d_form()).norm() < 1e-15);
    }

    #[test]
    fn u11k_leaves_outer_product_invariant() {
        let mut rng = stream_rng(19, 0);
        for _ in 0..50 {
            let u0 = complex_gaussian_vector(&mut rng, 5);
            let v0 = complex_gaussian_vector(&mut rng, 5);
            let a = sample_u11k(&mut rng, 1.0);
            let (u, v) = transform_pair(&a, &u0, &v0).unwrap();
            let t0 = sym_outer(&u0, &v0).unwrap();
            let t = sym_outer(&u, &v).unwrap();
            assert!(max_abs(&(t.matrix() - t0.matrix())) <= 1e-10 * (1.0 + t0.operator_norm()));
        }
    }

    #[test]
    fn nuclear_norm_pair_examples() {
        let x = ComplexVector::new(vec![c(1.0, 1.0), c(0.5, -2.0)]).unwrap();
        assert!(nuclear_norm_pair(&x, &x.rotate_phase(0.7)).unwrap() < 1e-7);
        let e1 = ComplexVector::basis(3, 0);
        let e2 = ComplexVector::basis(3, 1);
        assert!((nuclear_norm_pair(&e1, &e2).unwrap() - 2.0).abs() < 1e-15);
        let mut rng = stream_rng(20, 0);
        for _ in 0..50 {
            let x = complex_gaussian_vector(&mut rng, 8);
            let y = complex_gaussian_vector(&mut rng, 8);
            let dense = (&rank_one(&x) - &rank_one(&y)).nuclear_norm();
            assert!((nuclear_norm_pair(&x, &y).unwrap() - dense).abs() < 1e-10 * (1.0 + dense));
        }
    }

    #[test]
    fn hermitian_check() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 1.0), c(0.0, 1.0), c(1.0, 0.0)]);
        assert!(SymOperator::new(m).is_err());
        assert!(RealSymOperator::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0])).is_err());
    }
}

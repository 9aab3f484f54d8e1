//! Frames and their realified measurement operators.
//!
//! A frame is stored as its `n×m` synthesis matrix (column `k` is `f_k`)
//! together with the realified vectors `φ_k = ι(f_k)` and `Jφ_k`. The rank-two
//! operators `Φ_k = φ_kφ_kᵀ + Jφ_k(Jφ_k)ᵀ` are applied from these vectors and
//! only materialised on request.

use std::io::{Read, Write};
use std::path::Path;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector, SVD};
use num_complex::Complex64;

use crate::error::{check_dim, Error, Result};
use crate::hilbert::{apply_j_dv, iota_dv, iota_inv_dv, ComplexVector, RealifiedVector};
use crate::rng::{complex_normal, stream_rng};
use crate::symops::{RealSymOperator, SymOperator};

/// Smallest admissible singular value of a synthesis matrix or subset.
pub const SPAN_TOL: f64 = 1e-10;

/// Largest number of `n`-subsets `is_full_spark` will enumerate.
pub const SPARK_BUDGET: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    synthesis: DMatrix<Complex64>,
    phi: DMatrix<f64>,
    jphi: DMatrix<f64>,
}

impl Frame {
    pub fn new(vectors: &[ComplexVector]) -> Result<Self> {
        let Some(first) = vectors.first() else {
            return Err(Error::InvalidFrame("frame has no vectors".into()));
        };
        let n = first.dim();
        for v in vectors {
            check_dim(n, v.dim())?;
        }
        let synthesis = DMatrix::from_fn(n, vectors.len(), |i, k| vectors[k][i]);
        Self::from_synthesis(synthesis)
    }

    /// Builds a frame from its synthesis matrix (one frame vector per column).
    pub fn from_synthesis(synthesis: DMatrix<Complex64>) -> Result<Self> {
        let (n, m) = synthesis.shape();
        if n == 0 {
            return Err(Error::InvalidFrame("dimension must be at least 1".into()));
        }
        if m < n {
            return Err(Error::InvalidFrame(format!(
                "need at least n = {n} vectors, got {m}"
            )));
        }
        if let Some(i) = synthesis
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite(i));
        }
        let smin = min_singular_value(&synthesis);
        if smin <= SPAN_TOL {
            return Err(Error::InvalidFrame(format!(
                "vectors do not span the space (smallest singular value {smin:e})"
            )));
        }
        let mut phi = DMatrix::zeros(2 * n, m);
        let mut jphi = DMatrix::zeros(2 * n, m);
        for k in 0..m {
            let p = iota_dv(&synthesis.column(k).into_owned());
            jphi.set_column(k, &apply_j_dv(&p));
            phi.set_column(k, &p);
        }
        Ok(Self { synthesis, phi, jphi })
    }

    /// The standard orthonormal basis of `ℂⁿ`.
    pub fn standard_basis(n: usize) -> Self {
        Self::from_synthesis(DMatrix::identity(n, n)).expect("identity spans")
    }

    /// Every frame vector multiplied by the real factor `c ≠ 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::from_synthesis(&self.synthesis * Complex64::new(c, 0.0))
    }

    /// Complex dimension `n`.
    pub fn dim(&self) -> usize {
        self.synthesis.nrows()
    }

    /// Number of frame vectors `m`.
    pub fn len(&self) -> usize {
        self.synthesis.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn redundancy(&self) -> f64 {
        self.len() as f64 / self.dim() as f64
    }

    pub fn synthesis(&self) -> &DMatrix<Complex64> {
        &self.synthesis
    }

    pub fn vector(&self, k: usize) -> ComplexVector {
        ComplexVector::from_dvector_unchecked(self.synthesis.column(k).into_owned())
    }

    pub fn vectors(&self) -> Vec<ComplexVector> {
        (0..self.len()).map(|k| self.vector(k)).collect()
    }

    /// `φ_k = ι(f_k)`.
    pub fn phi(&self, k: usize) -> RealifiedVector {
        RealifiedVector::from_dvector_unchecked(self.phi.column(k).into_owned())
    }

    /// Dense `Φ_k = φ_kφ_kᵀ + Jφ_k(Jφ_k)ᵀ`.
    pub fn phi_operator(&self, k: usize) -> RealSymOperator {
        let p = self.phi.column(k);
        let q = self.jphi.column(k);
        RealSymOperator::from_matrix_unchecked(p * p.transpose() + q * q.transpose())
    }

    /// `Φ_k ξ = ⟨ξ, φ_k⟩φ_k + ⟨ξ, Jφ_k⟩Jφ_k`.
    pub fn apply_phi(&self, k: usize, xi: &RealifiedVector) -> Result<RealifiedVector> {
        check_dim(2 * self.dim(), xi.len())?;
        let p = self.phi.column(k);
        let q = self.jphi.column(k);
        let v = p * p.dot(xi.as_dvector()) + q * q.dot(xi.as_dvector());
        Ok(RealifiedVector::from_dvector_unchecked(v))
    }

    /// Analysis coefficients `⟨x, f_k⟩` for all `k`.
    pub(crate) fn coefficients_dv(&self, x: &DVector<Complex64>) -> DVector<Complex64> {
        self.synthesis.ad_mul(x)
    }

    pub fn coefficients(&self, x: &ComplexVector) -> Result<DVector<Complex64>> {
        check_dim(self.dim(), x.dim())?;
        Ok(self.coefficients_dv(x.as_dvector()))
    }

    /// The `2n×m` matrix whose columns are `v_k = Φ_k ξ`.
    ///
    /// Uses `Φ_k ι(x) = ι(⟨x, f_k⟩ f_k)`, so no `Φ_k` is formed.
    pub(crate) fn phi_xi_columns(&self, xi: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let x = iota_inv_dv(xi);
        let coef = self.coefficients_dv(&x);
        let mut out = DMatrix::zeros(2 * n, self.len());
        for (k, mut col) in out.column_iter_mut().enumerate() {
            let ck = coef[k];
            for j in 0..n {
                let z = self.synthesis[(j, k)] * ck;
                col[j] = z.re;
                col[j + n] = z.im;
            }
        }
        out
    }

    /// Frame operator `S = Σ f_k f_k*`.
    pub fn frame_operator(&self) -> SymOperator {
        SymOperator::from_matrix_unchecked(&self.synthesis * self.synthesis.adjoint())
    }

    /// Optimal frame bounds `(A, B)`: extreme eigenvalues of the frame operator.
    pub fn frame_bounds(&self) -> (f64, f64) {
        let vals = self.frame_operator().eigenvalues();
        (*vals.last().expect("n >= 1"), vals[0])
    }

    /// True iff every `n`-subset of the frame is linearly independent.
    pub fn is_full_spark(&self) -> Result<bool> {
        self.is_full_spark_with_budget(SPARK_BUDGET)
    }

    pub fn is_full_spark_with_budget(&self, budget: u128) -> Result<bool> {
        let (n, m) = (self.dim(), self.len());
        let subsets = binomial(m as u128, n as u128);
        if subsets > budget {
            return Err(Error::SparkBudgetExceeded { subsets, budget });
        }
        for cols in (0..m).combinations(n) {
            let sub = self.synthesis.select_columns(cols.iter());
            if min_singular_value(&sub) <= SPAN_TOL {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Writes one row per frame vector: `Re f_k(1), Im f_k(1), …, Re f_k(n), Im f_k(n)`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        for k in 0..self.len() {
            let row: Vec<String> = self
                .synthesis
                .column(k)
                .iter()
                .flat_map(|z| [z.re.to_string(), z.im.to_string()])
                .collect();
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut vectors = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            if rec.len() % 2 != 0 || rec.is_empty() {
                return Err(Error::Csv(format!(
                    "row {row}: expected an even, nonzero number of columns, got {}",
                    rec.len()
                )));
            }
            let vals = rec
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|e| Error::Csv(format!("row {row}: {s:?}: {e}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            let v = vals.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
            vectors.push(ComplexVector::new(v)?);
        }
        Self::new(&vectors)
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// `m` i.i.d. complex standard normal vectors in `ℂⁿ`, each scaled to unit
/// norm. Deterministic in `seed`.
pub fn random_gaussian_frame(n: usize, m: usize, seed: u64) -> Result<Frame> {
    if n == 0 || m < n {
        return Err(Error::InvalidFrame(format!(
            "need m >= n >= 1, got n = {n}, m = {m}"
        )));
    }
    let mut rng = stream_rng(seed, 0);
    // redraw on the (probability-zero) event of a rank-deficient draw
    for _ in 0..16 {
        let mut f = DMatrix::from_fn(n, m, |_, _| complex_normal(&mut rng));
        for mut col in f.column_iter_mut() {
            let norm = col.norm();
            col /= Complex64::new(norm, 0.0);
        }
        match Frame::from_synthesis(f) {
            Err(Error::InvalidFrame(_)) => continue,
            other => return other,
        }
    }
    Err(Error::InvalidFrame("could not draw a spanning frame".into()))
}

fn min_singular_value(m: &DMatrix<Complex64>) -> f64 {
    SVD::new(m.clone(), false, false)
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

fn binomial(m: u128, n: u128) -> u128 {
    if n > m {
        return 0;
    }
    let k = n.min(m - n);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(m - i) / (i + 1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::iota;
    use crate::rng::complex_gaussian_vector;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gaussian_frame_scalar_case() {
        let f = random_gaussian_frame(1, 1, 99).unwrap();
        assert!((f.vector(0)[0].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gaussian_frame_unit_norm_columns() {
        let f = random_gaussian_frame(100, 800, 1).unwrap();
        for k in 0..f.len() {
            assert!((f.vector(k).norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn gaussian_frame_determinism() {
        let a = random_gaussian_frame(4, 12, 5).unwrap();
        let b = random_gaussian_frame(4, 12, 5).unwrap();
        let d = random_gaussian_frame(4, 12, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, d);
    }

    #[test]
    fn invalid_dimensions() {
        assert!(random_gaussian_frame(3, 2, 0).is_err());
        assert!(random_gaussian_frame(0, 2, 0).is_err());
        let v = ComplexVector::from_reals(&[1.0, 0.0]).unwrap();
        assert!(matches!(Frame::new(&[v.clone(), v]), Err(Error::InvalidFrame(_))));
    }

    #[test]
    fn frame_bounds_examples() {
        let (a, b) = Frame::standard_basis(4).frame_bounds();
        assert!((a - 1.0).abs() < 1e-14 && (b - 1.0).abs() < 1e-14);
        let mut vs = Frame::standard_basis(3).vectors();
        vs.extend(Frame::standard_basis(3).vectors());
        let (a, b) = Frame::new(&vs).unwrap().frame_bounds();
        assert!((a - 2.0).abs() < 1e-14 && (b - 2.0).abs() < 1e-14);

        for seed in 0..10 {
            let f = random_gaussian_frame(5, 17, seed).unwrap();
            let (a, b) = f.frame_bounds();
            let avg = (0..f.len()).map(|k| f.vector(k).norm_squared()).sum::<f64>() / 5.0;
            assert!(0.0 < a && a <= avg + 1e-12 && avg <= b + 1e-12);
        }
    }

    #[test]
    fn full_spark_examples() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let f = Frame::new(&[
            ComplexVector::basis(2, 0),
            ComplexVector::basis(2, 1),
            ComplexVector::from_reals(&[s, s]).unwrap(),
        ])
        .unwrap();
        assert!(f.is_full_spark().unwrap());

        let g = Frame::new(&[
            ComplexVector::basis(2, 0),
            ComplexVector::basis(2, 1),
            ComplexVector::basis(2, 1),
        ])
        .unwrap();
        assert!(!g.is_full_spark().unwrap());

        assert!(random_gaussian_frame(3, 6, 3).unwrap().is_full_spark().unwrap());
        let big = random_gaussian_frame(10, 40, 3).unwrap();
        assert!(matches!(
            big.is_full_spark(),
            Err(Error::SparkBudgetExceeded { .. })
        ));
    }

    #[test]
    fn phi_action_matches_dense_operator() {
        let f = random_gaussian_frame(4, 10, 8).unwrap();
        let mut rng = stream_rng(21, 0);
        for k in 0..f.len() {
            let xi = iota(&complex_gaussian_vector(&mut rng, 4));
            let dense = f.phi_operator(k).apply(xi.as_dvector());
            let free = f.apply_phi(k, &xi).unwrap().into_dvector();
            assert!((dense - &free).amax() < 1e-12);
            let fast = f.phi_xi_columns(xi.as_dvector()).column(k).into_owned();
            assert!((fast - free).amax() < 1e-12);
        }
    }

    #[test]
    fn phi_quadratic_form_is_squared_coefficient() {
        let f = random_gaussian_frame(3, 9, 9).unwrap();
        let mut rng = stream_rng(22, 0);
        let x = complex_gaussian_vector(&mut rng, 3);
        let zeta = iota(&x);
        for k in 0..f.len() {
            let q = f.apply_phi(k, &zeta).unwrap().dot(&zeta).unwrap();
            let direct = x.inner(&f.vector(k)).unwrap().norm_sqr();
            assert!((q - direct).abs() < 1e-12 * (1.0 + direct));
        }
    }

    #[test]
    fn phi_is_rank_two_projector_scaled() {
        let f = random_gaussian_frame(3, 6, 10).unwrap();
        for k in 0..f.len() {
            let vals = f.phi_operator(k).eigenvalues();
            let nk = f.vector(k).norm_squared();
            assert!((vals[0] - nk).abs() < 1e-12 && (vals[1] - nk).abs() < 1e-12);
            assert!(vals[2..].iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn csv_round_trip() {
        let f = random_gaussian_frame(3, 7, 11).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 7);
        assert_eq!(text.lines().next().unwrap().split(',').count(), 6);
        assert_eq!(Frame::read_csv(buf.as_slice()).unwrap(), f);

        let explicit = "1, 0, 0, 0\n0,0,1,0\n0.5,0.5,0,-1\n";
        let g = Frame::read_csv(explicit.as_bytes()).unwrap();
        assert_eq!(g.vector(2)[0], c(0.5, 0.5));
        assert_eq!(g.vector(2)[1], c(0.0, -1.0));
        assert!(Frame::read_csv("1,2,3\n".as_bytes()).is_err());
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(6, 3), 20);
        assert_eq!(binomial(24, 3), 2024);
        assert!(binomial(800, 100) > SPARK_BUDGET);
    }
}

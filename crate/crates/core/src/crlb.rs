//! Fisher information and the Cramér-Rao lower bound for estimators
//! restricted to a fixed-phase slice `{x : ⟨x, z0⟩ > 0}`.

use nalgebra::DMatrix;

use crate::analysis::{projector_dense, r_dense};
use crate::error::{check_dim, Error, Result};
use crate::frames::Frame;
use crate::hilbert::{iota_dv, ComplexVector};
use crate::symops::{real_symmetric_eigen, RealSymOperator};

/// Default pseudoinverse cutoff relative to the largest eigenvalue.
pub const PINV_TOL: f64 = 1e-10;

/// Allowed `|Im⟨x, z0⟩|` relative to `max(1, ‖x‖)`.
pub const PHASE_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct CrlbResult {
    /// Projected Fisher information `Ĩ = Π I Π`.
    pub fisher: RealSymOperator,
    /// `Ĩ†`.
    pub crlb: RealSymOperator,
    /// `tr Ĩ†`, a lower bound on the MSE of unbiased estimators.
    pub mse_lower: f64,
    /// `(2n−1)σ² / (4 a₀ |⟨x, z0⟩|²)`, present when `a₀` is supplied.
    pub mse_upper_efficient: Option<f64>,
    pub rank_used: usize,
    pub tol: f64,
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("sigma must be > 0, got {sigma}")));
    }
    Ok(())
}

/// `I(ζ) = (4/σ²) R(ζ)` at `ζ = ι(x)`.
pub fn fisher_matrix(frame: &Frame, x: &ComplexVector, sigma: f64) -> Result<RealSymOperator> {
    check_sigma(sigma)?;
    check_dim(frame.dim(), x.dim())?;
    let r = r_dense(frame, &iota_dv(x.as_dvector()));
    Ok(RealSymOperator::from_matrix_unchecked(
        r * (4.0 / (sigma * sigma)),
    ))
}

fn check_alignment(x: &ComplexVector, z0: &ComplexVector) -> Result<f64> {
    check_dim(x.dim(), z0.dim())?;
    if (z0.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!(
            "z0 must have unit norm, got {}",
            z0.norm()
        )));
    }
    let g = x.inner(z0)?;
    if g.im.abs() > PHASE_TOL * x.norm().max(1.0) || g.re <= 0.0 {
        return Err(Error::PhaseMisaligned { re: g.re, im: g.im });
    }
    Ok(g.re)
}

/// `Ĩ(ζ) = Π I(ζ) Π` with `Π = 1 − Jψ₀ψ₀ᵀJᵀ`, `ψ₀ = ι(z0)`.
pub fn projected_fisher(
    frame: &Frame,
    x: &ComplexVector,
    z0: &ComplexVector,
    sigma: f64,
) -> Result<RealSymOperator> {
    let i = fisher_matrix(frame, x, sigma)?;
    check_alignment(x, z0)?;
    let p = projector_dense(&iota_dv(z0.as_dvector()));
    let mut m = &p * i.matrix() * &p;
    let t = m.transpose();
    m = (m + t) * 0.5;
    Ok(RealSymOperator::from_matrix_unchecked(m))
}

/// Pseudoinverse of a symmetric matrix with eigenvalues below `tol·λ_max`
/// treated as zero. Returns the inverse and the rank kept.
fn pinv_sym(m: &DMatrix<f64>, tol: f64) -> (DMatrix<f64>, usize) {
    let eig = real_symmetric_eigen(m);
    let top = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    let cut = tol * top;
    let d = m.nrows();
    let mut out = DMatrix::zeros(d, d);
    let mut rank = 0;
    for (j, &v) in eig.values.iter().enumerate() {
        if v > cut && v > 0.0 {
            let e = eig.vectors.column(j);
            out += e * e.transpose() * (1.0 / v);
            rank += 1;
        }
    }
    (out, rank)
}

/// CRLB at `(x, σ)` under the phase slice of `z0`.
///
/// Fails with [`Error::DegenerateFisher`] if `Ĩ` has rank below `2n − 1`.
pub fn crlb_bound(
    frame: &Frame,
    x: &ComplexVector,
    z0: &ComplexVector,
    sigma: f64,
    tol: f64,
    a0: Option<f64>,
) -> Result<CrlbResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be > 0, got {tol}")));
    }
    let fisher = projected_fisher(frame, x, z0, sigma)?;
    let expected = 2 * frame.dim() - 1;
    let (crlb, rank_used) = pinv_sym(fisher.matrix(), tol);
    if rank_used < expected {
        return Err(Error::DegenerateFisher {
            rank: rank_used,
            expected,
        });
    }
    let g = x.inner(z0)?.norm_sqr();
    let mse_upper_efficient = a0.map(|a| expected as f64 * sigma * sigma / (4.0 * a * g));
    Ok(CrlbResult {
        mse_lower: crlb.trace(),
        crlb: RealSymOperator::from_matrix_unchecked(crlb),
        fisher,
        mse_upper_efficient,
        rank_used,
        tol,
    })
}

/// Smallest eigenvalue of `Ĩ` above the pseudoinverse cutoff.
pub fn smallest_nonzero_eigenvalue(fisher: &RealSymOperator, tol: f64) -> f64 {
    let vals = fisher.eigenvalues();
    let cut = tol * vals[0].max(0.0);
    vals.into_iter()
        .filter(|&v| v > cut)
        .fold(f64::INFINITY, f64::min)
}

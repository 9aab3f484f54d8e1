//! Injectivity diagnostics and stability constants of the analysis map.
//!
//! The central object is `R(ξ) = Σ_k Φ_k ξ ξᵀ Φ_k` on `ℝ²ⁿ`. It is positive
//! semidefinite, always annihilates `Jξ`, and the map `α` is injective on
//! the classes `x̂` exactly when `rank R(ξ) = 2n − 1` for every `ξ ≠ 0`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::frames::Frame;
use crate::hilbert::{apply_j_dv, iota_inv_dv, ComplexVector, RealifiedVector};
use crate::measurement::alpha;
use crate::rng::{complex_gaussian_vector, complex_normal, stream_id, stream_rng};
use crate::symops::{nuclear_norm_pair, real_symmetric_eigen, RealSymOperator};

/// Relative eigenvalue threshold for the numerical rank of `R(ξ)`.
pub const RANK_TOL: f64 = 1e-8;

/// `R(ξ)` assembled densely as `V Vᵀ` with `V = [Φ_1ξ … Φ_mξ]`.
pub fn r_matrix(frame: &Frame, xi: &RealifiedVector) -> Result<RealSymOperator> {
    check_dim(2 * frame.dim(), xi.len())?;
    Ok(RealSymOperator::from_matrix_unchecked(r_dense(
        frame,
        xi.as_dvector(),
    )))
}

pub(crate) fn r_dense(frame: &Frame, xi: &DVector<f64>) -> DMatrix<f64> {
    let v = frame.phi_xi_columns(xi);
    let mut r = &v * v.transpose();
    symmetrize(&mut r);
    r
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let a = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = a;
            m[(j, i)] = a;
        }
    }
}

/// `R(ξ)η = Σ_k ⟨Φ_kξ, η⟩ Φ_kξ` without forming `R(ξ)`.
pub fn apply_r(frame: &Frame, xi: &RealifiedVector, eta: &RealifiedVector) -> Result<RealifiedVector> {
    check_dim(2 * frame.dim(), xi.len())?;
    check_dim(xi.len(), eta.len())?;
    let v = frame.phi_xi_columns(xi.as_dvector());
    let w = v.tr_mul(eta.as_dvector());
    Ok(RealifiedVector::from_dvector_unchecked(&v * w))
}

/// Numerical rank of `R(ξ)` at `tol·λ_max` and whether it equals `2n − 1`.
pub fn injectivity_rank_test(frame: &Frame, xi: &RealifiedVector, tol: f64) -> Result<(usize, bool)> {
    check_dim(2 * frame.dim(), xi.len())?;
    if xi.norm() == 0.0 {
        return Err(Error::InvalidArgument("rank test needs xi != 0".into()));
    }
    let vals = r_matrix(frame, xi)?.eigenvalues();
    let cut = tol * vals[0];
    let rank = vals.iter().filter(|&&v| v > cut).count();
    Ok((rank, rank + 1 == 2 * frame.dim()))
}

/// Estimated stability constants of `α` on the classes `x̂`.
///
/// `a0_opt` is an upper estimate of the true minimum and `b0` a lower
/// estimate of the true maximum.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub a0_opt: f64,
    pub a0: f64,
    pub b0: f64,
    pub argmin_xi: RealifiedVector,
    pub argmax_xi: RealifiedVector,
    pub rank_deficit_found: bool,
    pub samples: usize,
    pub restarts: usize,
    /// Spread `max − min` of the per-restart local minima.
    pub restart_spread: f64,
}

impl StabilityReport {
    /// `key=value` lines, one per scalar field.
    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "a0_opt={:e}", self.a0_opt);
        let _ = writeln!(s, "A0={:e}", self.a0);
        let _ = writeln!(s, "B0={:e}", self.b0);
        let _ = writeln!(s, "a0_is_estimate=true");
        let _ = writeln!(s, "rank_deficit_found={}", self.rank_deficit_found);
        let _ = writeln!(s, "a0_samples={}", self.samples);
        let _ = writeln!(s, "a0_restarts={}", self.restarts);
        let _ = writeln!(s, "a0_restart_spread={:e}", self.restart_spread);
        s
    }
}

/// Search budget for [`estimate_stability`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityConfig {
    pub restarts: usize,
    pub iters: usize,
    pub sphere_samples: usize,
    pub seed: u64,
}

/// [`estimate_stability`] with no extra sphere sampling beyond the restarts.
pub fn estimate_a0_opt(frame: &Frame, restarts: usize, iters: usize, seed: u64) -> Result<StabilityReport> {
    estimate_stability(
        frame,
        &StabilityConfig {
            restarts,
            iters,
            sphere_samples: 0,
            seed,
        },
    )
}

/// Unit vector uniform on the sphere of `ℝ²ⁿ`.
fn sphere_point<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    let z = complex_gaussian_vector(rng, n);
    let xi = crate::hilbert::iota_dv(z.as_dvector());
    let norm = xi.norm();
    xi / norm
}

/// Second smallest eigenpair of `R(ξ)`, i.e. `a_{2n−1}` for `n ≥ 1`.
fn low_pair(frame: &Frame, xi: &DVector<f64>) -> (f64, DVector<f64>) {
    let eig = real_symmetric_eigen(&r_dense(frame, xi));
    let d = eig.values.len();
    let j = d.saturating_sub(2);
    (eig.values[j], eig.vectors.column(j).into_owned())
}

fn top_pair(frame: &Frame, xi: &DVector<f64>) -> (f64, DVector<f64>) {
    let eig = real_symmetric_eigen(&r_dense(frame, xi));
    (eig.values[0], eig.vectors.column(0).into_owned())
}

/// Gradient of `ξ ↦ wᵀR(ξ)w` on `ℝ²ⁿ`: `2 Σ_k ⟨Φ_kξ, w⟩ Φ_k w`.
fn quad_gradient(frame: &Frame, xi: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
    let vx = frame.phi_xi_columns(xi);
    let vw = frame.phi_xi_columns(w);
    let c = vx.tr_mul(w);
    (&vw * c) * 2.0
}

/// Local minimisation of `a_{2n−1}(R(ξ))` on the unit sphere.
///
/// Each sweep first tries the fixed-point step `ξ ← w`, where `w` is the
/// eigenvector of `a_{2n−1}(R(ξ))`. By the symmetry
/// `⟨R(ξ)η,η⟩ = ⟨R(η)ξ,ξ⟩` this step never increases the objective. When it
/// stalls a projected gradient step with backtracking is taken instead.
fn descend(frame: &Frame, start: DVector<f64>, iters: usize) -> (f64, DVector<f64>) {
    let mut xi = start;
    let (mut val, mut w) = low_pair(frame, &xi);
    let mut step = 1.0;
    for _ in 0..iters {
        let stall = 1e-14 * val.abs().max(f64::MIN_POSITIVE);
        let (v_fp, w_fp) = low_pair(frame, &w);
        if v_fp < val - stall {
            xi = w;
            val = v_fp;
            w = w_fp;
            continue;
        }
        let g = quad_gradient(frame, &xi, &w);
        let g = &g - &xi * xi.dot(&g);
        let gn = g.norm();
        if gn <= 1e-15 * (1.0 + val.abs()) {
            break;
        }
        let mut improved = false;
        for _ in 0..40 {
            let cand = &xi - &g * (step / gn);
            let cand = &cand / cand.norm();
            let (vc, wc) = low_pair(frame, &cand);
            if vc < val - stall {
                xi = cand;
                val = vc;
                w = wc;
                step *= 2.0;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (val, xi)
}

/// Local maximisation of `‖R(ξ)‖` on the unit sphere by the alternating
/// step `ξ ← top eigenvector of R(ξ)`, which is monotone for the same
/// symmetry reason as in [`descend`].
fn ascend(frame: &Frame, start: DVector<f64>, iters: usize) -> (f64, DVector<f64>) {
    let mut xi = start;
    let (mut val, mut w) = top_pair(frame, &xi);
    for _ in 0..iters {
        let (v, wn) = top_pair(frame, &w);
        if v <= val * (1.0 + 1e-15) {
            break;
        }
        xi = w;
        val = v;
        w = wn;
    }
    (val, xi)
}

/// Multi-restart estimate of `a₀^opt = min_{‖ξ‖=1} a_{2n−1}(R(ξ))`,
/// `A₀ = √a₀^opt` and `B₀ = √max_{‖ξ‖=1} ‖R(ξ)‖`.
///
/// Restart `i` starts from the stream `(seed, (1, i))`; sphere sample `j`
/// uses `(seed, (2, j))`. The best sphere samples seed one extra refinement
/// each for the minimum and the maximum.
pub fn estimate_stability(frame: &Frame, cfg: &StabilityConfig) -> Result<StabilityReport> {
    if cfg.restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be >= 1".into()));
    }
    let n = frame.dim();
    let tol_rank = |v: f64, top: f64| v <= RANK_TOL * top;

    let mut best_min = (f64::INFINITY, DVector::zeros(2 * n));
    let mut best_max = (f64::NEG_INFINITY, DVector::zeros(2 * n));
    let mut rank_deficit = false;
    let mut consider =
        |frame: &Frame, xi: &DVector<f64>, lo: &mut (f64, DVector<f64>), hi: &mut (f64, DVector<f64>)| {
            let eig = real_symmetric_eigen(&r_dense(frame, xi));
            let d = eig.values.len();
            let low = eig.values[d.saturating_sub(2)];
            let top = eig.values[0];
            if tol_rank(low, top) {
                rank_deficit = true;
            }
            if low < lo.0 {
                *lo = (low, xi.clone());
            }
            if top > hi.0 {
                *hi = (top, xi.clone());
            }
        };

    let mut sample_lo = (f64::INFINITY, DVector::zeros(2 * n));
    let mut sample_hi = (f64::NEG_INFINITY, DVector::zeros(2 * n));
    for j in 0..cfg.sphere_samples {
        let mut rng = stream_rng(cfg.seed, stream_id(2, j as u32));
        let xi = sphere_point(&mut rng, n);
        consider(frame, &xi, &mut sample_lo, &mut sample_hi);
    }

    let mut local_minima = Vec::with_capacity(cfg.restarts + 1);
    let mut starts = Vec::with_capacity(cfg.restarts);
    for i in 0..cfg.restarts {
        let mut rng = stream_rng(cfg.seed, stream_id(1, i as u32));
        starts.push(sphere_point(&mut rng, n));
    }
    for s in &starts {
        consider(frame, s, &mut sample_lo, &mut sample_hi);
    }

    let mut min_starts = starts.clone();
    let mut max_starts = starts;
    if cfg.sphere_samples > 0 {
        min_starts.push(sample_lo.1.clone());
        max_starts.push(sample_hi.1.clone());
    }
    for s in min_starts {
        let (v, xi) = descend(frame, s, cfg.iters);
        local_minima.push(v);
        if v < best_min.0 {
            best_min = (v, xi);
        }
    }
    for s in max_starts {
        let (v, xi) = ascend(frame, s, cfg.iters.max(1));
        if v > best_max.0 {
            best_max = (v, xi);
        }
    }
    if sample_lo.0 < best_min.0 {
        best_min = sample_lo;
    }
    if sample_hi.0 > best_max.0 {
        best_max = sample_hi;
    }

    // report the objective exactly at the returned minimiser
    let (a0_opt, _) = low_pair(frame, &best_min.1);
    let a0_opt = a0_opt.max(0.0);
    let b0_sq = best_max.0.max(0.0);
    let top_at_min = top_pair(frame, &best_min.1).0;
    if tol_rank(a0_opt, top_at_min) {
        rank_deficit = true;
    }
    let spread = local_minima.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - local_minima.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(StabilityReport {
        a0_opt,
        a0: a0_opt.sqrt(),
        b0: b0_sq.sqrt(),
        argmin_xi: RealifiedVector::from_dvector_unchecked(best_min.1),
        argmax_xi: RealifiedVector::from_dvector_unchecked(best_max.1),
        rank_deficit_found: rank_deficit,
        samples: cfg.sphere_samples,
        restarts: cfg.restarts,
        restart_spread: spread,
    })
}

/// Extreme ratios `‖α(x) − α(y)‖ / ‖xx* − yy*‖₁` over random pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichReport {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub pairs: usize,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

/// Samples `trials` Gaussian pairs from the streams `(seed, (3, i))` and
/// compares the observed ratios with `[a0, b0]` at relative slack `rel`.
pub fn lipschitz_sandwich_check(
    frame: &Frame,
    trials: usize,
    a0: f64,
    b0: f64,
    rel: f64,
    seed: u64,
) -> Result<SandwichReport> {
    let n = frame.dim();
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio = 0.0f64;
    let mut pairs = 0;
    for i in 0..trials {
        let mut rng = stream_rng(seed, stream_id(3, i as u32));
        let x = complex_gaussian_vector(&mut rng, n);
        let y = complex_gaussian_vector(&mut rng, n);
        let Some(r) = lipschitz_ratio(frame, &x, &y)? else {
            continue;
        };
        pairs += 1;
        min_ratio = min_ratio.min(r);
        max_ratio = max_ratio.max(r);
    }
    Ok(SandwichReport {
        min_ratio,
        max_ratio,
        pairs,
        lower_ok: min_ratio >= a0 * (1.0 - rel),
        upper_ok: max_ratio <= b0 * (1.0 + rel),
    })
}

/// `‖α(x) − α(y)‖ / ‖xx* − yy*‖₁`, or `None` when `x̂ = ŷ`.
pub fn lipschitz_ratio(frame: &Frame, x: &ComplexVector, y: &ComplexVector) -> Result<Option<f64>> {
    let den = nuclear_norm_pair(x, y)?;
    let scale = x.norm_squared() + y.norm_squared();
    // the closed form cancels to about √ε·scale when x̂ = ŷ
    if den <= 1e-6 * scale {
        return Ok(None);
    }
    let num = alpha(frame, x)?.distance(&alpha(frame, y)?)?;
    Ok(Some(num / den))
}

/// A random `W ∈ S^{2,1}` with `‖W‖₁ = 1`, returned as eigenvalues and
/// orthonormal eigenvectors (columns). For `n = 2` the positive part has
/// rank one.
pub fn sample_s21<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    if n < 2 {
        return Err(Error::InvalidArgument("S^{2,1} sampling needs n >= 2".into()));
    }
    let k = n.min(3);
    let g = DMatrix::from_fn(n, k, |_, _| complex_normal(rng));
    let q = g.qr().q();
    // uniform split of the unit nuclear norm among k eigenvalues
    let mut w: Vec<f64> = (0..k).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    w[k - 1] = -w[k - 1];
    Ok((w, q))
}

/// `‖𝒜(W)‖²` for `W = Σ_j λ_j e_j e_j*`.
fn cal_a_norm_sq(frame: &Frame, lambdas: &[f64], vecs: &DMatrix<Complex64>) -> f64 {
    let coef = vecs.ad_mul(frame.synthesis());
    (0..frame.len())
        .map(|k| {
            let a: f64 = lambdas
                .iter()
                .enumerate()
                .map(|(j, l)| l * coef[(j, k)].norm_sqr())
                .sum();
            a * a
        })
        .sum()
}

/// Sampling estimate of `A₃ = inf_{W ∈ S^{2,1}, ‖W‖₁=1} ‖𝒜(W)‖²`.
///
/// Sample `i` is drawn from the stream `(seed, (4, i))`, so a larger budget
/// with the same seed extends the earlier sample set and the estimate can
/// only decrease. The result is an upper estimate of `A₃`.
pub fn estimate_a3(frame: &Frame, samples: usize, seed: u64) -> Result<f64> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be >= 1".into()));
    }
    let mut best = f64::INFINITY;
    for i in 0..samples {
        let mut rng = stream_rng(seed, stream_id(4, i as u32));
        let (l, v) = sample_s21(&mut rng, frame.dim())?;
        best = best.min(cal_a_norm_sq(frame, &l, &v));
    }
    Ok(best)
}

/// Projector `1 − Jξ(Jξ)ᵀ/‖ξ‖²` onto the complement of `Jξ`.
pub fn complement_projector(xi: &RealifiedVector) -> Result<RealSymOperator> {
    let nrm2 = xi.as_dvector().norm_squared();
    if nrm2 == 0.0 {
        return Err(Error::InvalidArgument("projector needs xi != 0".into()));
    }
    Ok(RealSymOperator::from_matrix_unchecked(projector_dense(
        xi.as_dvector(),
    )))
}

pub(crate) fn projector_dense(xi: &DVector<f64>) -> DMatrix<f64> {
    let jx = apply_j_dv(xi) / xi.norm();
    DMatrix::identity(xi.len(), xi.len()) - &jx * jx.transpose()
}

/// `ι⁻¹` for a realified minimiser, e.g. to build `z0` from `argmin_xi`.
pub fn to_complex(xi: &RealifiedVector) -> ComplexVector {
    ComplexVector::from_dvector_unchecked(iota_inv_dv(xi.as_dvector()))
}

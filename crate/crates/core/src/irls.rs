//! Iterative regularized least-squares reconstruction.
//!
//! Each iteration minimises `J(u, x_t, λ_t, μ_t)` over `u`, which in the
//! realified space is the linear system
//! `(R(ζ_t) + (λ_t + μ_t)·1) ζ_{t+1} = ι(Q x_t) + μ_t ζ_t`, then rescales the
//! solution and anneals `(λ, μ)` geometrically.

use std::fmt;
use std::io::Write;

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{check_dim, Error, Result};
use crate::frames::Frame;
use crate::hilbert::{inner_unchecked, iota_dv, iota_inv_dv, ComplexVector, RealifiedVector};
use crate::measurement::{alpha, cal_a, cal_a_outer, MeasurementVector};
use crate::symops::{
    hermitian_eigen, nuclear_norm_outer, s11_spectral_factored, sym_outer, trace_outer, trace_outer_squared,
    SymOperator,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopMode {
    /// Stop once `λ_t ≤ λ_min`.
    LambdaFloor,
    /// Stop once `Σ_k |y_k − |⟨x_t, f_k⟩|²|² ≤ κ m σ²`.
    Residual,
    /// Whichever of the two fires first.
    Either,
}

impl fmt::Display for StopMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopMode::LambdaFloor => "lambda",
            StopMode::Residual => "residual",
            StopMode::Either => "either",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrlsConfig {
    pub rho: f64,
    pub gamma: f64,
    pub lambda_min: f64,
    pub mu_min: f64,
    pub kappa: f64,
    pub max_iters: usize,
    pub stop_mode: StopMode,
}

impl Default for IrlsConfig {
    fn default() -> Self {
        Self {
            rho: 0.5,
            gamma: 0.8,
            lambda_min: 0.01,
            mu_min: 1.0,
            kappa: 3.0,
            max_iters: 500,
            stop_mode: StopMode::Either,
        }
    }
}

impl IrlsConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad(format!("rho must lie in (0, 1), got {}", self.rho));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if !(self.lambda_min > 0.0 && self.lambda_min.is_finite()) {
            return bad(format!("lambda_min must be > 0, got {}", self.lambda_min));
        }
        if !(self.mu_min > 0.0 && self.mu_min.is_finite()) {
            return bad(format!("mu_min must be > 0, got {}", self.mu_min));
        }
        if !(self.kappa >= 1.0 && self.kappa.is_finite()) {
            return bad(format!("kappa must be >= 1, got {}", self.kappa));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be >= 1".into());
        }
        Ok(())
    }

    /// `λ_t = λ₀ γᵗ`.
    pub fn lambda_at(&self, lambda0: f64, t: usize) -> f64 {
        lambda0 * self.gamma.powi(t as i32)
    }

    /// `μ_t = max(μ₀ γᵗ, μ_min)`.
    pub fn mu_at(&self, mu0: f64, t: usize) -> f64 {
        (mu0 * self.gamma.powi(t as i32)).max(self.mu_min)
    }
}

/// Iterate `x_t` together with the parameters for the next step.
#[derive(Debug, Clone)]
pub struct IrlsState {
    pub x: ComplexVector,
    /// `x_{t−1}`, absent at `t = 0`.
    pub x_prev: Option<ComplexVector>,
    pub lambda: f64,
    pub mu: f64,
    pub lambda0: f64,
    pub mu0: f64,
    pub iter: usize,
    /// `Σ_k |y_k − |⟨x_t, f_k⟩|²|²`.
    pub residual: f64,
    /// Smallest eigenvalue of `X_t = x_{t−1}∘x_t`.
    pub min_eig: f64,
}

/// One row of the iteration trace.
#[derive(Debug, Clone, PartialEq)]
pub struct IrlsRecord {
    pub iter: usize,
    /// `λ` and `μ` used by the step that produced this iterate.
    pub lambda: f64,
    pub mu: f64,
    pub residual: f64,
    /// `‖y − 𝒜(X_t)‖²`.
    pub model_residual: f64,
    pub min_eig: f64,
    /// Phase-aligned `‖x_t − x‖²`.
    pub err_to_truth: Option<f64>,
    /// `‖X_t − xx*‖²_F`.
    pub frob_err: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IrlsTrace {
    pub records: Vec<IrlsRecord>,
}

impl IrlsTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// CSV with columns `iter,lambda,mu,residual_db,min_eig,err_db,frob_err_db`.
    /// Quantities without a reference signal are left empty.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "iter",
            "lambda",
            "mu",
            "residual_db",
            "min_eig",
            "err_db",
            "frob_err_db",
        ])?;
        let opt_db = |v: Option<f64>| v.map(|e| format!("{:e}", db(e))).unwrap_or_default();
        for r in &self.records {
            w.write_record([
                r.iter.to_string(),
                format!("{:e}", r.lambda),
                format!("{:e}", r.mu),
                format!("{:e}", db(r.model_residual)),
                format!("{:e}", r.min_eig),
                opt_db(r.err_to_truth),
                opt_db(r.frob_err),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn db(v: f64) -> f64 {
    10.0 * v.log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    LambdaFloor,
    Residual,
    MaxIters,
    /// `Q` has no positive eigenvalue, so `x̂ = 0`.
    ZeroInit,
    /// An iterate collapsed to zero.
    ZeroIterate,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::LambdaFloor => "lambda_floor",
            SolveStatus::Residual => "residual",
            SolveStatus::MaxIters => "max_iters",
            SolveStatus::ZeroInit => "zero_init",
            SolveStatus::ZeroIterate => "zero_iterate",
        })
    }
}

#[derive(Debug, Clone)]
pub struct IrlsOutcome {
    pub x_hat: ComplexVector,
    pub trace: IrlsTrace,
    pub status: SolveStatus,
    pub iters: usize,
    pub final_residual: f64,
    /// Multiplicity of the top eigenvalue of `Q` at initialization.
    pub top_multiplicity: usize,
}

/// `Q = Σ_k y_k f_k f_k*`.
pub fn build_q(frame: &Frame, y: &MeasurementVector) -> Result<SymOperator> {
    check_dim(frame.len(), y.len())?;
    let f = frame.synthesis();
    let mut weighted = f.clone();
    for (k, mut col) in weighted.column_iter_mut().enumerate() {
        col *= Complex64::new(y[k], 0.0);
    }
    let mut q = weighted * f.adjoint();
    let qa = q.adjoint();
    q = (q + qa) * Complex64::new(0.5, 0.0);
    Ok(SymOperator::from_matrix_unchecked(q))
}

/// `Q x` evaluated as `F (y ⊙ F* x)`.
fn apply_q(frame: &Frame, y: &MeasurementVector, x: &DVector<Complex64>) -> DVector<Complex64> {
    let c = frame.coefficients_dv(x);
    let w = DVector::from_fn(c.len(), |k, _| c[k] * y[k]);
    frame.synthesis() * w
}

#[derive(Debug, Clone)]
pub enum Initialization {
    Start {
        x0: ComplexVector,
        lambda0: f64,
        mu0: f64,
        top_multiplicity: usize,
    },
    /// `a₁(Q) ≤ 0`: the least-squares minimiser is `0`.
    Zero,
}

/// Spectral start `x0 = β₀ e₁`, `λ₀ = μ₀ = ρ a₁`.
pub fn initialize(frame: &Frame, y: &MeasurementVector, rho: f64) -> Result<Initialization> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "rho must lie in (0, 1) for a nonzero start, got {rho}"
        )));
    }
    let q = build_q(frame, y)?;
    let eig = hermitian_eigen(q.matrix());
    let a1 = eig.values[0];
    if !(a1 > 0.0) {
        return Ok(Initialization::Zero);
    }
    let tie = 1e-12 * a1;
    let top_multiplicity = eig.values.iter().filter(|&&v| a1 - v <= tie).count();
    let e1 = eig.vectors.column(0).into_owned();
    let s4: f64 = frame
        .coefficients_dv(&e1)
        .iter()
        .map(|c| c.norm_sqr().powi(2))
        .sum();
    let beta0 = ((1.0 - rho) * a1 / s4).sqrt();
    Ok(Initialization::Start {
        x0: ComplexVector::from_dvector_unchecked(e1 * Complex64::new(beta0, 0.0)),
        lambda0: rho * a1,
        mu0: rho * a1,
        top_multiplicity,
    })
}

/// `Σ_k |y_k − |⟨x, f_k⟩|²|²`.
pub fn rank_one_residual(frame: &Frame, y: &MeasurementVector, x: &ComplexVector) -> Result<f64> {
    let a = alpha(frame, x)?;
    Ok(a.distance(y)?.powi(2))
}

/// Smallest eigenvalue of `u∘v`, from the closed form
/// `½(Re⟨u,v⟩ − √(‖u‖²‖v‖² − Im²⟨u,v⟩))`.
fn min_eig_outer(u: &DVector<Complex64>, v: &DVector<Complex64>) -> f64 {
    let g = inner_unchecked(u, v);
    let root = (u.norm_squared() * v.norm_squared() - g.im * g.im)
        .max(0.0)
        .sqrt();
    (0.5 * (g.re - root)).min(0.0)
}

/// Matrix and right-hand side of the realified subproblem at `ζ = ι(x)`.
pub fn subproblem_system(
    frame: &Frame,
    y: &MeasurementVector,
    x: &ComplexVector,
    lambda: f64,
    mu: f64,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    check_dim(frame.dim(), x.dim())?;
    check_dim(frame.len(), y.len())?;
    let zeta = iota_dv(x.as_dvector());
    let v = frame.phi_xi_columns(&zeta);
    let mut a = &v * v.transpose();
    let d = a.nrows();
    for i in 0..d {
        for j in 0..i {
            let s = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = s;
            a[(j, i)] = s;
        }
        a[(i, i)] += lambda + mu;
    }
    let rhs = iota_dv(&apply_q(frame, y, x.as_dvector())) + &zeta * mu;
    Ok((a, rhs))
}

/// The subproblem objective in `ξ = ι(u)` with `ζ = ι(x_t)`:
/// `Σ_k (⟨Φ_kζ, ξ⟩ − y_k)² + λ‖ξ‖² + μ‖ξ − ζ‖² + λ‖ζ‖²`, which equals
/// `J(u, x_t, λ, μ)`.
pub fn subproblem_objective(
    frame: &Frame,
    y: &MeasurementVector,
    x: &ComplexVector,
    xi: &RealifiedVector,
    lambda: f64,
    mu: f64,
) -> Result<f64> {
    check_dim(frame.dim(), x.dim())?;
    check_dim(2 * frame.dim(), xi.len())?;
    let zeta = iota_dv(x.as_dvector());
    let v = frame.phi_xi_columns(&zeta);
    let p = v.tr_mul(xi.as_dvector());
    let fit: f64 = p.iter().zip(y.as_slice()).map(|(a, b)| (a - b).powi(2)).sum();
    let xi = xi.as_dvector();
    Ok(fit + lambda * xi.norm_squared() + mu * (xi - &zeta).norm_squared() + lambda * zeta.norm_squared())
}

/// Exact minimiser of [`subproblem_objective`], before rescaling.
pub fn solve_subproblem(
    frame: &Frame,
    y: &MeasurementVector,
    x: &ComplexVector,
    lambda: f64,
    mu: f64,
) -> Result<RealifiedVector> {
    if !(lambda + mu > 0.0) {
        return Err(Error::SingularSystem(lambda + mu));
    }
    let (a, rhs) = subproblem_system(frame, y, x, lambda, mu)?;
    let chol = Cholesky::new(a).ok_or(Error::SingularSystem(lambda + mu))?;
    Ok(RealifiedVector::from_dvector_unchecked(chol.solve(&rhs)))
}

/// One iteration: subproblem solve, rescale to norm `√(‖ζ_t‖‖ζ_{t+1}‖)`,
/// then anneal `(λ, μ)`.
pub fn irls_step(
    frame: &Frame,
    y: &MeasurementVector,
    cfg: &IrlsConfig,
    state: &IrlsState,
) -> Result<IrlsState> {
    let next = solve_subproblem(frame, y, &state.x, state.lambda, state.mu)?;
    let n_old = state.x.norm();
    let n_new = next.norm();
    let x_new = if n_new > 0.0 {
        let c = (n_old / n_new).sqrt();
        iota_inv_dv(next.as_dvector()) * Complex64::new(c, 0.0)
    } else {
        DVector::zeros(frame.dim())
    };
    let x_new = ComplexVector::from_dvector_unchecked(x_new);
    let t = state.iter + 1;
    Ok(IrlsState {
        residual: rank_one_residual(frame, y, &x_new)?,
        min_eig: min_eig_outer(state.x.as_dvector(), x_new.as_dvector()),
        x_prev: Some(state.x.clone()),
        x: x_new,
        lambda: cfg.lambda_at(state.lambda0, t),
        mu: cfg.mu_at(state.mu0, t),
        lambda0: state.lambda0,
        mu0: state.mu0,
        iter: t,
    })
}

/// `e^{iφ₀}x̂` with `e^{iφ₀} = ⟨x, x̂⟩/|⟨x, x̂⟩|`, the closest point of the
/// orbit of `x̂` to `x`. Returns `x̂` unchanged and `false` if `⟨x, x̂⟩ = 0`.
pub fn phase_align(x_hat: &ComplexVector, x_true: &ComplexVector) -> Result<(ComplexVector, bool)> {
    let g = x_true.inner(x_hat)?;
    if g.norm() == 0.0 {
        return Ok((x_hat.clone(), false));
    }
    Ok((x_hat.scale_complex(g / g.norm()), true))
}

/// `‖u∘v − xx*‖²_F` in O(n).
fn frob_err_sq(u: &ComplexVector, v: &ComplexVector, x: &ComplexVector) -> f64 {
    let tx2 = trace_outer_squared(u, v).unwrap_or(f64::NAN);
    let xu = inner_unchecked(x.as_dvector(), u.as_dvector());
    let vx = inner_unchecked(v.as_dvector(), x.as_dvector());
    let cross = (xu.conj() * vx.conj()).re;
    (tx2 - 2.0 * cross + x.norm_squared().powi(2)).max(0.0)
}

fn record(
    frame: &Frame,
    y: &MeasurementVector,
    prev: &IrlsState,
    st: &IrlsState,
    truth: Option<&ComplexVector>,
) -> Result<IrlsRecord> {
    let xp = st.x_prev.as_ref().unwrap_or(&st.x);
    let model = cal_a_outer(frame, xp, &st.x)?.distance(y)?.powi(2);
    let (err, frob) = match truth {
        Some(x) => {
            let (al, _) = phase_align(&st.x, x)?;
            (Some((&al - x).norm_squared()), Some(frob_err_sq(xp, &st.x, x)))
        }
        None => (None, None),
    };
    Ok(IrlsRecord {
        iter: st.iter,
        lambda: prev.lambda,
        mu: prev.mu,
        residual: st.residual,
        model_residual: model,
        min_eig: st.min_eig,
        err_to_truth: err,
        frob_err: frob,
    })
}

/// Spectral initialization followed by [`solve_from`].
///
/// `sigma` enables the residual stop; without it the λ floor is used.
pub fn solve(
    frame: &Frame,
    y: &MeasurementVector,
    cfg: &IrlsConfig,
    sigma: Option<f64>,
    truth: Option<&ComplexVector>,
) -> Result<IrlsOutcome> {
    cfg.validate()?;
    check_dim(frame.len(), y.len())?;
    match initialize(frame, y, cfg.rho)? {
        Initialization::Zero => Ok(IrlsOutcome {
            x_hat: ComplexVector::zeros(frame.dim()),
            trace: IrlsTrace::default(),
            status: SolveStatus::ZeroInit,
            iters: 0,
            final_residual: y.norm_squared(),
            top_multiplicity: 0,
        }),
        Initialization::Start {
            x0,
            lambda0,
            mu0,
            top_multiplicity,
        } => {
            let mut out = solve_from(frame, y, cfg, x0, lambda0, mu0, sigma, truth)?;
            out.top_multiplicity = top_multiplicity;
            Ok(out)
        }
    }
}

/// Runs the iteration from an arbitrary start and initial `(λ₀, μ₀)`.
#[allow(clippy::too_many_arguments)]
pub fn solve_from(
    frame: &Frame,
    y: &MeasurementVector,
    cfg: &IrlsConfig,
    x0: ComplexVector,
    lambda0: f64,
    mu0: f64,
    sigma: Option<f64>,
    truth: Option<&ComplexVector>,
) -> Result<IrlsOutcome> {
    cfg.validate()?;
    check_dim(frame.dim(), x0.dim())?;
    check_dim(frame.len(), y.len())?;
    if let Some(x) = truth {
        check_dim(frame.dim(), x.dim())?;
    }
    let residual_target = match (cfg.stop_mode, sigma) {
        (StopMode::LambdaFloor, _) | (_, None) => None,
        (_, Some(s)) => Some(cfg.kappa * frame.len() as f64 * s * s),
    };
    let use_floor = cfg.stop_mode != StopMode::Residual || residual_target.is_none();

    let mut state = IrlsState {
        residual: rank_one_residual(frame, y, &x0)?,
        min_eig: 0.0,
        x: x0,
        x_prev: None,
        lambda: lambda0,
        mu: cfg.mu_at(mu0, 0),
        lambda0,
        mu0,
        iter: 0,
    };
    let mut trace = IrlsTrace::default();
    let status = loop {
        let next = irls_step(frame, y, cfg, &state)?;
        trace.records.push(record(frame, y, &state, &next, truth)?);
        state = next;
        if state.x.is_zero() {
            break SolveStatus::ZeroIterate;
        }
        if residual_target.is_some_and(|r| state.residual <= r) {
            break SolveStatus::Residual;
        }
        if use_floor && state.lambda <= cfg.lambda_min {
            break SolveStatus::LambdaFloor;
        }
        if state.iter >= cfg.max_iters {
            break SolveStatus::MaxIters;
        }
    };
    Ok(IrlsOutcome {
        final_residual: state.residual,
        iters: state.iter,
        x_hat: state.x,
        trace,
        status,
        top_multiplicity: 1,
    })
}

/// `J(u, v, λ, μ) = Σ_k |y_k − Re(⟨u,f_k⟩⟨f_k,v⟩)|² + λ‖u‖² + μ‖u − v‖² + λ‖v‖²`.
pub fn eval_j(
    frame: &Frame,
    y: &MeasurementVector,
    u: &ComplexVector,
    v: &ComplexVector,
    lambda: f64,
    mu: f64,
) -> Result<f64> {
    let fit = cal_a_outer(frame, u, v)?.distance(y)?.powi(2);
    Ok(fit + lambda * u.norm_squared() + mu * (u - v).norm_squared() + lambda * v.norm_squared())
}

/// `J₀(X) = Σ_k |y_k − ⟨X f_k, f_k⟩|²`.
pub fn eval_j0(frame: &Frame, y: &MeasurementVector, x: &SymOperator) -> Result<f64> {
    Ok(cal_a(frame, x)?.distance(y)?.powi(2))
}

/// `(J₁, J₂, J₃)` at `X`; they coincide on `S^{1,1}`.
pub fn eval_j123(
    frame: &Frame,
    y: &MeasurementVector,
    x: &SymOperator,
    lambda: f64,
    mu: f64,
) -> Result<(f64, f64, f64)> {
    let res = eval_j0(frame, y, x)?;
    let vals = x.eigenvalues();
    let a_max = vals[0];
    let a_min = vals[vals.len() - 1];
    let nuc: f64 = vals.iter().map(|v| v.abs()).sum();
    let tr: f64 = vals.iter().sum();
    let j1 = res + 2.0 * (lambda + mu) * nuc - 2.0 * mu * tr;
    let j2 = res + 2.0 * lambda * a_max - (2.0 * lambda + 4.0 * mu) * a_min;
    let j3 = res + 2.0 * lambda * nuc - 4.0 * mu * a_min;
    Ok((j1, j2, j3))
}

/// `J₁(u∘v)` from the factors in O(nm), using the closed forms for the
/// trace and nuclear norm of `u∘v`.
pub fn eval_j1_outer(
    frame: &Frame,
    y: &MeasurementVector,
    u: &ComplexVector,
    v: &ComplexVector,
    lambda: f64,
    mu: f64,
) -> Result<f64> {
    let res = cal_a_outer(frame, u, v)?.distance(y)?.powi(2);
    Ok(res + 2.0 * (lambda + mu) * nuclear_norm_outer(u, v)? - 2.0 * mu * trace_outer(u, v)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateStatus {
    /// Every evaluated bound holds.
    Satisfied,
    /// A bound fails; the supplied `A₃` overestimates the true constant.
    Violated,
    /// `J(u,v) > J(x,x)`, so the bounds do not apply.
    Inapplicable,
}

/// Evaluated robustness bounds for a candidate pair `(u, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessCertificate {
    pub status: CertificateStatus,
    pub j_uv: f64,
    pub j_xx: f64,
    pub j_00: f64,
    pub noise_norm: f64,
    /// `‖u∘v − xx*‖₁`.
    pub nuclear_err: f64,
    /// `2λ/A₃ + 2√(λ²/A₃² + ‖ν‖²/A₃)`.
    pub nuclear_bound: f64,
    /// `4λ/A₃ + 2‖ν‖/√A₃`.
    pub nuclear_bound_simple: f64,
    /// Phase-aligned `‖x − x̂‖²` with `x̂ = e^{iφ₀}√a₁ e₁`.
    pub l2_err: f64,
    pub a2: f64,
    /// `4λ/A₃ + 2‖ν‖/√A₃ + ‖ν‖²/(4μ) + λ‖x‖²/(2μ)`.
    pub l2_bound: f64,
    /// `4λ/A₃ + 2‖ν‖/√A₃ + ‖ν‖²/(4μ)`, present when `J(u,v) ≤ J(0,0)`.
    pub l2_bound_tight: Option<f64>,
}

/// Evaluates both sides of the robustness bounds at `(u, v)`.
#[allow(clippy::too_many_arguments)]
pub fn robustness_certificate(
    frame: &Frame,
    y: &MeasurementVector,
    u: &ComplexVector,
    v: &ComplexVector,
    x_true: &ComplexVector,
    lambda: f64,
    mu: f64,
    a3: f64,
) -> Result<RobustnessCertificate> {
    if !(a3 > 0.0) || !(mu > 0.0) || !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need a3 > 0, mu > 0, lambda >= 0 (got {a3}, {mu}, {lambda})"
        )));
    }
    let n = frame.dim();
    let j_uv = eval_j(frame, y, u, v, lambda, mu)?;
    let j_xx = eval_j(frame, y, x_true, x_true, lambda, mu)?;
    let zero = ComplexVector::zeros(n);
    let j_00 = eval_j(frame, y, &zero, &zero, lambda, mu)?;
    let noise_norm = alpha(frame, x_true)?.distance(y)?;

    let diff = &sym_outer(u, v)? - &crate::symops::rank_one(x_true);
    let nuclear_err = diff.nuclear_norm();
    let nuclear_bound =
        2.0 * lambda / a3 + 2.0 * (lambda * lambda / (a3 * a3) + noise_norm.powi(2) / a3).sqrt();
    let nuclear_bound_simple = 4.0 * lambda / a3 + 2.0 * noise_norm / a3.sqrt();

    let (l2_err, a2) = if n >= 2 {
        let d = s11_spectral_factored(u, v)?;
        let e1 = d.e1.scale(d.a_plus.sqrt());
        let (xh, _) = phase_align(&e1, x_true)?;
        ((x_true - &xh).norm_squared(), -d.a_minus)
    } else {
        let t = trace_outer(u, v)?.max(0.0);
        let xh = ComplexVector::basis(1, 0).scale(t.sqrt());
        let (xh, _) = phase_align(&xh, x_true)?;
        ((x_true - &xh).norm_squared(), 0.0)
    };
    let base = nuclear_bound_simple + noise_norm.powi(2) / (4.0 * mu);
    let l2_bound = base + lambda * x_true.norm_squared() / (2.0 * mu);
    let l2_bound_tight = (j_uv <= j_00).then_some(base);

    let status = if j_uv > j_xx {
        CertificateStatus::Inapplicable
    } else {
        let slack = 1e-9;
        let ok = nuclear_err <= nuclear_bound * (1.0 + slack) + slack
            && l2_err <= l2_bound * (1.0 + slack) + slack
            && l2_bound_tight.is_none_or(|b| l2_err <= b * (1.0 + slack) + slack);
        if ok {
            CertificateStatus::Satisfied
        } else {
            CertificateStatus::Violated
        }
    };
    Ok(RobustnessCertificate {
        status,
        j_uv,
        j_xx,
        j_00,
        noise_norm,
        nuclear_err,
        nuclear_bound,
        nuclear_bound_simple,
        l2_err,
        a2,
        l2_bound,
        l2_bound_tight,
    })
}

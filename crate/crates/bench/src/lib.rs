//! Monte Carlo experiment harness: SNR sweeps over noise realizations,
//! MSE with its bias/variance split, and the CRLB for comparison.
//!
//! Every random draw comes from a stream keyed by the master seed:
//!
//! | quantity               | stream                          |
//! |------------------------|---------------------------------|
//! | frame                  | `(0, 0)`                        |
//! | signal `i`             | `(1, i)`                        |
//! | noise, SNR `s`, trial `t` | `(NOISE_BASE + s, t)`        |
//! | random start           | `(INIT_BASE + s, t)`            |
//! | stability estimate     | `seed + 1` (separate key)       |
//!
//! so results do not depend on the number of worker threads.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use phaseret::analysis::{estimate_a0_opt, StabilityReport};
use phaseret::crlb::{crlb_bound, PINV_TOL};
use phaseret::frames::random_gaussian_frame;
use phaseret::irls::{initialize, phase_align, solve, solve_from, Initialization, IrlsConfig, IrlsTrace};
use phaseret::measurement::{add_noise, alpha, sigma_for_snr, NoiseSpec};
use phaseret::rng::{complex_gaussian_vector, stream_id, stream_rng, unit_sphere_vector};
use phaseret::{Complex64, ComplexVector, Frame};
use rayon::prelude::*;

pub const NOISE_BASE: u32 = 1 << 16;
pub const INIT_BASE: u32 = 1 << 17;

pub const TRIALS_HEADER: [&str; 7] = [
    "snr_db",
    "trial",
    "status",
    "iters",
    "mse",
    "crlb_trace",
    "final_residual",
];
pub const AGGREGATE_HEADER: [&str; 6] = ["snr_db", "mse", "bias_sq", "variance", "crlb_trace", "mean_iters"];
pub const AGGREGATE_DB_HEADER: [&str; 5] = ["snr_db", "mse_db", "bias_sq_db", "variance_db", "crlb_trace_db"];

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("degenerate frame or signal: {0}")]
    Degenerate(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl BenchError {
    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 2,
            BenchError::Degenerate(_) => 3,
            BenchError::Io(_) => 1,
        }
    }
}

impl From<phaseret::Error> for BenchError {
    fn from(e: phaseret::Error) -> Self {
        use phaseret::Error as E;
        match e {
            E::InvalidFrame(_)
            | E::DegenerateFisher { .. }
            | E::NotInS11 { .. }
            | E::PhaseMisaligned { .. }
            | E::SingularSystem(_) => BenchError::Degenerate(e.to_string()),
            E::Io(_) | E::Csv(_) => BenchError::Io(e.to_string()),
            _ => BenchError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for BenchError {
    fn from(e: std::io::Error) -> Self {
        BenchError::Io(e.to_string())
    }
}

impl From<csv::Error> for BenchError {
    fn from(e: csv::Error) -> Self {
        BenchError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    /// Spectral start from the top eigenpair of `Q`.
    Eigen,
    /// Unit-norm complex Gaussian start with the spectral `(λ₀, μ₀)`.
    Random,
}

impl std::fmt::Display for InitMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InitMode::Eigen => "eigen",
            InitMode::Random => "random",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub n: usize,
    pub m: usize,
    pub snr_db_list: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    pub irls: IrlsConfig,
    pub init_mode: InitMode,
    /// Draw a fresh signal per trial instead of one fixed signal.
    pub multi_signal: bool,
    /// Restarts for the stability estimate in the manifest; 0 skips it.
    pub a0_restarts: usize,
    pub a0_iters: usize,
}

impl ExperimentSpec {
    /// The full-scale sweep: `n = 100`, `m = 800`,
    /// SNR −30…40 dB in 5 dB steps, 100 trials.
    pub fn full_scale(seed: u64) -> Self {
        Self {
            n: 100,
            m: 800,
            snr_db_list: snr_range(-30.0, 40.0, 5.0).expect("valid range"),
            trials: 100,
            master_seed: seed,
            irls: IrlsConfig::default(),
            init_mode: InitMode::Eigen,
            multi_signal: false,
            a0_restarts: 0,
            a0_iters: 20,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(BenchError::Config("n must be >= 1".into()));
        }
        if self.m < self.n {
            return Err(BenchError::Config(format!(
                "m = {} must be >= n = {}",
                self.m, self.n
            )));
        }
        if self.trials == 0 {
            return Err(BenchError::Config("trials must be >= 1".into()));
        }
        if self.snr_db_list.is_empty() {
            return Err(BenchError::Config("SNR list is empty".into()));
        }
        if self.snr_db_list.iter().any(|s| !s.is_finite()) {
            return Err(BenchError::Config("SNR values must be finite".into()));
        }
        if self.snr_db_list.len() >= NOISE_BASE as usize || self.trials > u32::MAX as usize {
            return Err(BenchError::Config("sweep too large for the stream layout".into()));
        }
        self.irls
            .validate()
            .map_err(|e| BenchError::Config(e.to_string()))
    }
}

/// `start, start + step, …` up to and including `stop` (within `step/1e6`).
pub fn snr_range(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() {
        return Err(BenchError::Config(format!("bad SNR range {start}:{step}:{stop}")));
    }
    if stop < start {
        return Err(BenchError::Config(format!(
            "snr-stop {stop} is below snr-start {start}"
        )));
    }
    let count = ((stop - start) / step + 1e-6).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

/// Complex Gaussian signal rotated so its first entry is real positive.
pub fn draw_signal(seed: u64, index: u32, n: usize) -> ComplexVector {
    let mut rng = stream_rng(seed, stream_id(1, index));
    let x = complex_gaussian_vector(&mut rng, n);
    let x0 = x[0];
    if x0.norm() == 0.0 {
        return x;
    }
    let mut v = x.scale_complex(x0.conj() / x0.norm()).into_dvector();
    v[0] = Complex64::new(x0.norm(), 0.0);
    ComplexVector::from_dvector(v).expect("finite entries")
}

#[derive(Debug, Clone)]
pub struct Setup {
    pub frame: Frame,
    /// One signal, or one per trial in multi-signal mode.
    pub signals: Vec<ComplexVector>,
}

impl Setup {
    pub fn signal(&self, trial: usize) -> &ComplexVector {
        &self.signals[trial.min(self.signals.len() - 1)]
    }
}

pub fn prepare(spec: &ExperimentSpec) -> Result<Setup> {
    spec.validate()?;
    let frame = random_gaussian_frame(spec.n, spec.m, spec.master_seed)?;
    let count = if spec.multi_signal { spec.trials } else { 1 };
    let signals: Vec<_> = (0..count)
        .map(|i| draw_signal(spec.master_seed, i as u32, spec.n))
        .collect();
    if signals.iter().any(|x| x.is_zero()) {
        return Err(BenchError::Degenerate("signal draw is zero".into()));
    }
    Ok(Setup { frame, signals })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub snr_db: f64,
    pub trial: usize,
    /// Solver stop reason, or `solver_error` when the solve itself failed.
    pub status: String,
    pub iters: usize,
    /// Phase-aligned `‖x̂ − x‖²`.
    pub mse: f64,
    pub crlb_trace: f64,
    pub final_residual: f64,
    /// Aligned error vector `x̂ − x`, used for the bias/variance split.
    pub error: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub snr_db: f64,
    pub mse: f64,
    pub bias_sq: f64,
    pub variance: f64,
    pub crlb_trace: f64,
    pub mean_iters: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub trials: Vec<TrialRecord>,
    pub aggregates: Vec<Aggregate>,
}

/// `σ` and CRLB trace for signal `x` at one SNR, with `z0 = x/‖x‖`.
pub fn crlb_for(frame: &Frame, x: &ComplexVector, snr_db: f64) -> Result<(f64, f64)> {
    let sigma = sigma_for_snr(frame, x, snr_db)?;
    let z0 = x.scale(1.0 / x.norm());
    let res = crlb_bound(frame, x, &z0, sigma, PINV_TOL, None)?;
    Ok((sigma, res.mse_lower))
}

fn noise_spec(spec: &ExperimentSpec, snr_index: usize, trial: usize, sigma: f64) -> Result<NoiseSpec> {
    Ok(NoiseSpec::new(sigma, spec.master_seed)?
        .with_stream(stream_id(NOISE_BASE + snr_index as u32, trial as u32)))
}

/// Runs one noise realization and returns the solver outcome.
pub fn run_trial(
    spec: &ExperimentSpec,
    setup: &Setup,
    snr_index: usize,
    trial: usize,
    sigma: f64,
    with_truth: bool,
) -> Result<phaseret::irls::IrlsOutcome> {
    let x = setup.signal(trial);
    let y = add_noise(
        &alpha(&setup.frame, x)?,
        &noise_spec(spec, snr_index, trial, sigma)?,
    );
    let truth = with_truth.then_some(x);
    let out = match spec.init_mode {
        InitMode::Eigen => solve(&setup.frame, &y, &spec.irls, Some(sigma), truth)?,
        InitMode::Random => match initialize(&setup.frame, &y, spec.irls.rho)? {
            Initialization::Zero => solve(&setup.frame, &y, &spec.irls, Some(sigma), truth)?,
            Initialization::Start { lambda0, mu0, .. } => {
                let mut rng = stream_rng(
                    spec.master_seed,
                    stream_id(INIT_BASE + snr_index as u32, trial as u32),
                );
                let x0 = unit_sphere_vector(&mut rng, spec.n);
                solve_from(&setup.frame, &y, &spec.irls, x0, lambda0, mu0, Some(sigma), truth)?
            }
        },
    };
    Ok(out)
}

/// Full sweep. Trials are solved in parallel on the current rayon pool and
/// gathered in `(snr_index, trial)` order.
pub fn run_sweep(spec: &ExperimentSpec, setup: &Setup) -> Result<SweepResult> {
    spec.validate()?;
    // (σ, crlb) per (snr, signal)
    let per_snr: Vec<Vec<(f64, f64)>> = spec
        .snr_db_list
        .iter()
        .map(|&snr| {
            setup
                .signals
                .iter()
                .map(|x| crlb_for(&setup.frame, x, snr))
                .collect()
        })
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize)> = (0..spec.snr_db_list.len())
        .flat_map(|s| (0..spec.trials).map(move |t| (s, t)))
        .collect();
    let trials: Vec<TrialRecord> = jobs
        .par_iter()
        .map(|&(s, t)| {
            let (sigma, crlb) = per_snr[s][t.min(setup.signals.len() - 1)];
            let x = setup.signal(t);
            let (x_hat, status, iters, final_residual) = match run_trial(spec, setup, s, t, sigma, false) {
                Ok(out) => (out.x_hat, out.status.to_string(), out.iters, out.final_residual),
                // a failed solve counts as the zero estimate
                Err(BenchError::Degenerate(_)) | Err(BenchError::Config(_)) => (
                    ComplexVector::zeros(spec.n),
                    "solver_error".to_string(),
                    0,
                    f64::NAN,
                ),
                Err(e) => return Err(e),
            };
            let (aligned, _) = phase_align(&x_hat, x)?;
            let err = &aligned - x;
            Ok(TrialRecord {
                snr_db: spec.snr_db_list[s],
                trial: t,
                status,
                iters,
                mse: err.norm_squared(),
                crlb_trace: crlb,
                final_residual,
                error: err.as_slice().to_vec(),
            })
        })
        .collect::<Result<_>>()?;

    let aggregates = trials.chunks(spec.trials).map(aggregate).collect();
    Ok(SweepResult { trials, aggregates })
}

/// MSE, bias² and variance of the aligned errors `e_t`:
/// `mean‖e‖²`, `‖mean e‖²` and `mean‖e − ē‖²`.
pub fn aggregate(records: &[TrialRecord]) -> Aggregate {
    let count = records.len() as f64;
    let dim = records[0].error.len();
    let mut mean = vec![Complex64::new(0.0, 0.0); dim];
    for r in records {
        for (m, e) in mean.iter_mut().zip(&r.error) {
            *m += e / count;
        }
    }
    let bias_sq: f64 = mean.iter().map(|z| z.norm_sqr()).sum();
    let variance = records
        .iter()
        .map(|r| {
            r.error
                .iter()
                .zip(&mean)
                .map(|(e, m)| (e - m).norm_sqr())
                .sum::<f64>()
        })
        .sum::<f64>()
        / count;
    Aggregate {
        snr_db: records[0].snr_db,
        mse: records.iter().map(|r| r.mse).sum::<f64>() / count,
        bias_sq,
        variance,
        crlb_trace: records.iter().map(|r| r.crlb_trace).sum::<f64>() / count,
        mean_iters: records.iter().map(|r| r.iters as f64).sum::<f64>() / count,
    }
}

fn db(v: f64) -> f64 {
    10.0 * v.log10()
}

pub fn write_trials_csv<W: Write>(records: &[TrialRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRIALS_HEADER)?;
    for r in records {
        w.write_record([
            r.snr_db.to_string(),
            r.trial.to_string(),
            r.status.clone(),
            r.iters.to_string(),
            r.mse.to_string(),
            r.crlb_trace.to_string(),
            r.final_residual.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_aggregate_csv<W: Write>(aggs: &[Aggregate], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(AGGREGATE_HEADER)?;
    for a in aggs {
        w.write_record([
            a.snr_db.to_string(),
            a.mse.to_string(),
            a.bias_sq.to_string(),
            a.variance.to_string(),
            a.crlb_trace.to_string(),
            a.mean_iters.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_aggregate_db_csv<W: Write>(aggs: &[Aggregate], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(AGGREGATE_DB_HEADER)?;
    for a in aggs {
        w.write_record([
            a.snr_db.to_string(),
            db(a.mse).to_string(),
            db(a.bias_sq).to_string(),
            db(a.variance).to_string(),
            db(a.crlb_trace).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Iteration trace of trial 0 at the given SNR, with reference quantities.
pub fn run_traces(spec: &ExperimentSpec, setup: &Setup, snr_index: usize) -> Result<IrlsTrace> {
    let snr = *spec
        .snr_db_list
        .get(snr_index)
        .ok_or_else(|| BenchError::Config(format!("no SNR at index {snr_index}")))?;
    let sigma = sigma_for_snr(&setup.frame, setup.signal(0), snr)?;
    Ok(run_trial(spec, setup, snr_index, 0, sigma, true)?.trace)
}

/// Optional stability estimate reported in the manifest.
pub fn stability(spec: &ExperimentSpec, setup: &Setup) -> Result<Option<StabilityReport>> {
    if spec.a0_restarts == 0 {
        return Ok(None);
    }
    Ok(Some(estimate_a0_opt(
        &setup.frame,
        spec.a0_restarts,
        spec.a0_iters,
        spec.master_seed.wrapping_add(1),
    )?))
}

/// `key=value` run manifest.
pub fn manifest(
    spec: &ExperimentSpec,
    setup: &Setup,
    report: Option<&StabilityReport>,
    threads: usize,
) -> String {
    let mut s = String::new();
    let snrs: Vec<String> = spec.snr_db_list.iter().map(|v| v.to_string()).collect();
    let c = &spec.irls;
    let _ = writeln!(s, "version={}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "n={}", spec.n);
    let _ = writeln!(s, "m={}", spec.m);
    let _ = writeln!(s, "redundancy={}", spec.m as f64 / spec.n as f64);
    let _ = writeln!(s, "snr_db={}", snrs.join(","));
    let _ = writeln!(s, "trials={}", spec.trials);
    let _ = writeln!(s, "seed={}", spec.master_seed);
    let _ = writeln!(s, "rho={}", c.rho);
    let _ = writeln!(s, "gamma={}", c.gamma);
    let _ = writeln!(s, "lambda_min={}", c.lambda_min);
    let _ = writeln!(s, "mu_min={}", c.mu_min);
    let _ = writeln!(s, "kappa={}", c.kappa);
    let _ = writeln!(s, "max_iters={}", c.max_iters);
    let _ = writeln!(s, "stop={}", c.stop_mode);
    let _ = writeln!(s, "init={}", spec.init_mode);
    let _ = writeln!(s, "z0=true_direction");
    let _ = writeln!(s, "multi_signal={}", spec.multi_signal);
    let _ = writeln!(s, "threads={threads}");
    let _ = writeln!(s, "pinv_tol={PINV_TOL}");
    let _ = writeln!(s, "signal_norm={}", setup.signal(0).norm());
    let (a, b) = setup.frame.frame_bounds();
    let _ = writeln!(s, "frame_lower_bound={a}");
    let _ = writeln!(s, "frame_upper_bound={b}");
    match report {
        Some(r) => s.push_str(&r.to_key_values()),
        None => {
            let _ = writeln!(s, "a0_opt=skipped");
        }
    }
    s
}

/// Writes `trials.csv`, `aggregate.csv`, `aggregate_db.csv`, and with
/// `traces` one `traces/trace_snr_<db>.csv` per SNR.
pub fn write_outputs(
    spec: &ExperimentSpec,
    setup: &Setup,
    result: &SweepResult,
    out: &Path,
    traces: bool,
) -> Result<()> {
    fs::create_dir_all(out)?;
    write_trials_csv(&result.trials, fs::File::create(out.join("trials.csv"))?)?;
    write_aggregate_csv(&result.aggregates, fs::File::create(out.join("aggregate.csv"))?)?;
    write_aggregate_db_csv(
        &result.aggregates,
        fs::File::create(out.join("aggregate_db.csv"))?,
    )?;
    if traces {
        let dir = out.join("traces");
        fs::create_dir_all(&dir)?;
        for (i, snr) in spec.snr_db_list.iter().enumerate() {
            let trace = run_traces(spec, setup, i)?;
            trace.write_csv(fs::File::create(dir.join(format!("trace_snr_{snr}.csv")))?)?;
        }
    }
    Ok(())
}

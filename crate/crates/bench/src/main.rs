use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use phaseret::irls::{IrlsConfig, StopMode};
use phaseret_bench::{
    manifest, prepare, run_sweep, snr_range, stability, write_outputs, BenchError, ExperimentSpec, InitMode,
};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InitArg {
    Eigen,
    Random,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StopArg {
    Lambda,
    Residual,
    Either,
}

/// Monte Carlo SNR sweep of the IRLS phase retrieval solver against the CRLB.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Args {
    /// Signal dimension.
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Number of frame vectors; overrides --redundancy.
    #[arg(long)]
    m: Option<usize>,
    /// m = redundancy * n when --m is absent.
    #[arg(long, default_value_t = 8)]
    redundancy: usize,
    #[arg(long, default_value_t = -30.0, allow_hyphen_values = true)]
    snr_start: f64,
    #[arg(long, default_value_t = 40.0, allow_hyphen_values = true)]
    snr_stop: f64,
    #[arg(long, default_value_t = 5.0)]
    snr_step: f64,
    /// Noise realizations per SNR.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    #[arg(long, default_value_t = 0.8)]
    gamma: f64,
    #[arg(long, default_value_t = 0.01)]
    lambda_min: f64,
    #[arg(long, default_value_t = 1.0)]
    mu_min: f64,
    #[arg(long, default_value_t = 3.0)]
    kappa: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, value_enum, default_value_t = InitArg::Eigen)]
    init: InitArg,
    #[arg(long, value_enum, default_value_t = StopArg::Either)]
    stop: StopArg,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write per-iteration traces of trial 0 at every SNR.
    #[arg(long)]
    traces: bool,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Draw a new signal for every trial.
    #[arg(long)]
    multi_signal: bool,
    /// Restarts for the stability estimate written to the manifest; 0 skips it.
    #[arg(long, default_value_t = 0)]
    a0_restarts: usize,
    #[arg(long, default_value_t = 50)]
    a0_iters: usize,
}

fn spec_from(args: &Args) -> Result<ExperimentSpec, BenchError> {
    let m = match args.m {
        Some(m) => m,
        None => args
            .n
            .checked_mul(args.redundancy)
            .ok_or_else(|| BenchError::Config("n * redundancy overflows".into()))?,
    };
    let spec = ExperimentSpec {
        n: args.n,
        m,
        snr_db_list: snr_range(args.snr_start, args.snr_stop, args.snr_step)?,
        trials: args.trials,
        master_seed: args.seed,
        irls: IrlsConfig {
            rho: args.rho,
            gamma: args.gamma,
            lambda_min: args.lambda_min,
            mu_min: args.mu_min,
            kappa: args.kappa,
            max_iters: args.max_iters,
            stop_mode: match args.stop {
                StopArg::Lambda => StopMode::LambdaFloor,
                StopArg::Residual => StopMode::Residual,
                StopArg::Either => StopMode::Either,
            },
        },
        init_mode: match args.init {
            InitArg::Eigen => InitMode::Eigen,
            InitArg::Random => InitMode::Random,
        },
        multi_signal: args.multi_signal,
        a0_restarts: args.a0_restarts,
        a0_iters: args.a0_iters,
    };
    spec.validate()?;
    Ok(spec)
}

fn run(args: &Args) -> Result<(), BenchError> {
    let spec = spec_from(args)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads)
        .build()
        .map_err(|e| BenchError::Config(e.to_string()))?;
    pool.install(|| {
        let setup = prepare(&spec)?;
        let report = stability(&spec, &setup)?;
        let result = run_sweep(&spec, &setup)?;
        write_outputs(&spec, &setup, &result, &args.out, args.traces)?;
        let text = manifest(&spec, &setup, report.as_ref(), pool.current_num_threads());
        std::fs::write(args.out.join("manifest.txt"), text)?;
        for a in &result.aggregates {
            println!(
                "snr={:>6} dB  mse={:.3e}  crlb={:.3e}  iters={:.1}",
                a.snr_db, a.mse, a.crlb_trace, a.mean_iters
            );
        }
        Ok(())
    })
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! `sgddiag` — convergence-diagnostic SGD experiments from the command line.
//!
//! Exit codes: 0 success, 1 validation error (bad flags, config, spec),
//! 2 runtime failure (divergence, I/O), 3 verify-quadratic tolerance failure.

mod figures;
mod verify;

use clap::{Parser, Subcommand};
use sgddiag::engine::ControllerConfig;
use sgddiag::harness::export::{export_report, export_sign_curve, export_trace, ExportFormat};
use sgddiag::harness::{self, ExperimentConfig};
use sgddiag::problems::make_problem;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "sgddiag",
    about = "Convergence-diagnostic step sizes for SGD: runs, replications, and figure presets",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Overrides {
    /// Base seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Iteration count override.
    #[arg(long)]
    iters: Option<u64>,
    /// Replication count override.
    #[arg(long)]
    reps: Option<u64>,
    /// Initial step size override (diagnostic controllers).
    #[arg(long)]
    gamma0: Option<f64>,
    /// Step-size decrease factor override (diagnostic controllers).
    #[arg(long)]
    r: Option<f64>,
    /// Distance-diagnostic slope threshold override.
    #[arg(long)]
    thresh: Option<f64>,
    /// Distance-diagnostic checkpoint ratio override.
    #[arg(long)]
    q: Option<f64>,
    /// Distance-diagnostic burn-in exponent override.
    #[arg(long)]
    k0: Option<u32>,
    /// Pflug burn-in override.
    #[arg(long = "burn-in")]
    burn_in: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// One seeded run; writes the trace.
    Run {
        /// Experiment configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output path; falls back to the config's outputs.trace_path, then
        /// to `trace.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_parser = parse_format)]
        format: Option<ExportFormat>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Seeded replications; writes the aggregated report.
    Replicate {
        #[arg(long)]
        config: PathBuf,
        /// Output path; falls back to the config's outputs.report_path, then
        /// to `report.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_parser = parse_format)]
        format: Option<ExportFormat>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Sign experiment: fraction of replications with S_n ≤ 0 after a
    /// restart from stationarity.
    PflugSign {
        /// Problem dimension.
        #[arg(long, default_value_t = 20)]
        d: usize,
        /// Pre-restart step size; defaults to 1/(5 tr H).
        #[arg(long = "gamma-old")]
        gamma_old: Option<f64>,
        /// Step-size decrease factor.
        #[arg(long, default_value_t = 0.1)]
        r: f64,
        #[arg(long, default_value_t = 10_000)]
        iters: u64,
        #[arg(long, default_value_t = 1000)]
        reps: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "pflug_sign.csv")]
        out: PathBuf,
        #[arg(long, value_parser = parse_format, default_value = "csv")]
        format: ExportFormat,
    },
    /// Monte Carlo vs closed-form comparison table for random quadratics.
    VerifyQuadratic {
        /// Maximum model dimension.
        #[arg(long, default_value_t = 3)]
        d: usize,
        /// Step size as a fraction of 1/L.
        #[arg(long, default_value_t = 0.4)]
        gamma: f64,
        /// Chains per estimate.
        #[arg(long, default_value_t = 10_000)]
        reps: u64,
        /// Number of random models.
        #[arg(long, default_value_t = 5)]
        models: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Named presets emitting the CSVs behind the reproducible figures.
    Figure {
        /// One of: fig2-pflug, fig3-slopes, fig4-logistic,
        /// fig7-least-squares, appA-uc, appA-pflug-sign.
        name: String,
        /// Output directory.
        #[arg(long, default_value = "figures")]
        out: PathBuf,
        /// Full-scale sizes (n = 10⁶) instead of desk scale (n = 10⁵).
        #[arg(long)]
        full: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn parse_format(s: &str) -> Result<ExportFormat, String> {
    match s {
        "csv" => Ok(ExportFormat::Csv),
        "json" => Ok(ExportFormat::Json),
        other => Err(format!("unknown format `{other}` (csv|json)")),
    }
}

/// Failures carry the exit code they map to.
pub(crate) struct Failure {
    code: u8,
    message: String,
}

pub(crate) type CliResult<T> = Result<T, Failure>;

pub(crate) fn invalid(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

pub(crate) fn runtime(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn classify(err: sgddiag::Error) -> Failure {
    use sgddiag::Error::*;
    match err {
        InvalidSpec { .. } | InvalidParameter(_) | Config(_) | DimensionMismatch { .. } => Failure {
            code: 1,
            message: err.to_string(),
        },
        _ => Failure {
            code: 2,
            message: err.to_string(),
        },
    }
}

fn load_config(path: &Path) -> CliResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| runtime(format!("cannot read `{}`: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("config error: {e}")))
}

fn apply_overrides(config: &mut ExperimentConfig, ov: &Overrides) -> CliResult<()> {
    if let Some(seed) = ov.seed {
        config.base_seed = seed;
    }
    if let Some(iters) = ov.iters {
        config.n_iters = iters;
    }
    if let Some(reps) = ov.reps {
        config.n_reps = reps;
    }
    let diag_overrides = ov.gamma0.is_some()
        || ov.r.is_some()
        || ov.thresh.is_some()
        || ov.q.is_some()
        || ov.k0.is_some()
        || ov.burn_in.is_some();
    if diag_overrides {
        match &mut config.controller {
            ControllerConfig::Diagnostic {
                gamma0,
                r,
                diagnostic,
            } => {
                if let Some(g) = ov.gamma0 {
                    *gamma0 = g;
                }
                if let Some(rv) = ov.r {
                    *r = rv;
                }
                use sgddiag::diagnostics::DiagnosticConfig::*;
                match diagnostic {
                    Distance { thresh, q, k0 } => {
                        if let Some(t) = ov.thresh {
                            *thresh = t;
                        }
                        if let Some(qv) = ov.q {
                            *q = qv;
                        }
                        if let Some(k) = ov.k0 {
                            *k0 = k;
                        }
                        if ov.burn_in.is_some() {
                            return Err(invalid("--burn-in applies to Pflug controllers only"));
                        }
                    }
                    Pflug { burn_in } => {
                        if let Some(b) = ov.burn_in {
                            *burn_in = b;
                        }
                        if ov.thresh.is_some() || ov.q.is_some() || ov.k0.is_some() {
                            return Err(invalid(
                                "--thresh/--q/--k0 apply to distance controllers only",
                            ));
                        }
                    }
                    _ => {
                        if ov.thresh.is_some()
                            || ov.q.is_some()
                            || ov.k0.is_some()
                            || ov.burn_in.is_some()
                        {
                            return Err(invalid(
                                "diagnostic overrides do not apply to this controller",
                            ));
                        }
                    }
                }
            }
            ControllerConfig::Fixed { .. } => {
                return Err(invalid(
                    "diagnostic overrides require a diagnostic controller",
                ));
            }
        }
    }
    Ok(())
}

fn resolve_output(
    flag: &Option<PathBuf>,
    config_path: Option<&PathBuf>,
    format_flag: Option<ExportFormat>,
    config_format: Option<ExportFormat>,
    default_name: &str,
) -> (PathBuf, ExportFormat) {
    let path = flag
        .clone()
        .or_else(|| config_path.cloned())
        .unwrap_or_else(|| PathBuf::from(default_name));
    let format = format_flag.or(config_format).unwrap_or_default();
    (path, format)
}

fn cmd_run(
    config: &Path,
    out: &Option<PathBuf>,
    format: Option<ExportFormat>,
    overrides: &Overrides,
) -> CliResult<()> {
    let mut config = load_config(config)?;
    apply_overrides(&mut config, overrides)?;
    let (out, format) = resolve_output(
        out,
        config.outputs.as_ref().and_then(|o| o.trace_path.as_ref()),
        format,
        config.outputs.as_ref().map(|o| o.format),
        "trace.csv",
    );
    let problem = make_problem(&config.problem).map_err(classify)?;
    let mut init_rng = sgddiag::rng::seeded_rng(config.base_seed);
    let theta0 = config
        .init
        .resolve(&problem, &mut init_rng)
        .map_err(classify)?;
    let trace = sgddiag::engine::run(
        &problem,
        &config.controller,
        &theta0,
        config.n_iters,
        sgddiag::rng::splitmix64(config.base_seed),
        &config.options,
    )
    .map_err(classify)?;
    export_trace(&trace, &out, format).map_err(classify)?;
    println!(
        "run: {} iterations, {} restarts -> {}",
        config.n_iters,
        trace.restarts.len(),
        out.display()
    );
    Ok(())
}

fn cmd_replicate(
    config: &Path,
    out: &Option<PathBuf>,
    format: Option<ExportFormat>,
    overrides: &Overrides,
) -> CliResult<()> {
    let mut config = load_config(config)?;
    apply_overrides(&mut config, overrides)?;
    let (out, format) = resolve_output(
        out,
        config.outputs.as_ref().and_then(|o| o.report_path.as_ref()),
        format,
        config.outputs.as_ref().map(|o| o.format),
        "report.csv",
    );
    let report = harness::replicate(&config).map_err(classify)?;
    export_report(&report, &out, format).map_err(classify)?;
    println!(
        "replicate: {} replications ({} diverged) -> {}",
        report.n_reps,
        report.failed.len(),
        out.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_pflug_sign(
    d: usize,
    gamma_old: Option<f64>,
    r: f64,
    iters: u64,
    reps: u64,
    seed: u64,
    out: &Path,
    format: ExportFormat,
) -> CliResult<()> {
    let spec = sgddiag::problems::ProblemSpec::least_squares(d, 1.0, seed);
    let problem = make_problem(&spec).map_err(classify)?;
    let gamma_old =
        gamma_old.unwrap_or(1.0 / (5.0 * problem.constants().r_sq.expect("quadratic")));
    let curve = harness::pflug_sign_experiment(&problem, gamma_old, r, iters, reps, seed)
        .map_err(classify)?;
    export_sign_curve(&curve, out, format).map_err(classify)?;
    println!(
        "pflug-sign: {} replications, gamma_old {gamma_old:.6} -> {}",
        reps,
        out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    harness::init_thread_pool_from_env();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            config,
            out,
            format,
            overrides,
        } => cmd_run(config, out, *format, overrides),
        Command::Replicate {
            config,
            out,
            format,
            overrides,
        } => cmd_replicate(config, out, *format, overrides),
        Command::PflugSign {
            d,
            gamma_old,
            r,
            iters,
            reps,
            seed,
            out,
            format,
        } => cmd_pflug_sign(*d, *gamma_old, *r, *iters, *reps, *seed, out, *format),
        Command::VerifyQuadratic {
            d,
            gamma,
            reps,
            models,
            seed,
        } => verify::verify_quadratic(*d, *gamma, *reps, *models, *seed),
        Command::Figure {
            name,
            out,
            full,
            seed,
        } => figures::emit(name, out, *full, *seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

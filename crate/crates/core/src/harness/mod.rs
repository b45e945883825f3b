//! Seeded Monte Carlo replication, stationary-distribution sampling, the
//! Pflug sign experiment, rate-slope fitting, and trace export.
//!
//! Replications are independent tasks executed on the rayon pool; results
//! are collected keyed by replication index so the aggregate is identical
//! whatever the degree of concurrency. Replication seeds are derived as
//! `base_seed XOR splitmix64(index)` — part of the reproducibility contract.

pub mod export;

use crate::diagnostics::{pflug_update, PflugState};
use crate::engine::{record_grid, run, ControllerConfig, RunOptions, RunTrace};
use crate::error::{Error, Result};
use crate::linalg::{self, ls_slope, mean_se};
use crate::problems::Problem;
use crate::rng::{replication_seed, seeded_rng, splitmix64, RunRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

/// Starting point of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    Zero,
    Point(Vec<f64>),
    /// θ* + √dist_sq · direction; the direction is the smallest-eigenvalue
    /// basis vector for quadratics, or a seeded random unit vector.
    OptimumOffset {
        dist_sq: f64,
        #[serde(default)]
        along_min_eigenvector: bool,
    },
    /// Approximate draw from π_{γ_old} via a long constant-step run.
    Stationary {
        gamma_old: f64,
        #[serde(default)]
        burn_iters: Option<u64>,
    },
}

impl InitSpec {
    pub fn resolve(&self, problem: &Problem, rng: &mut RunRng) -> Result<Vec<f64>> {
        match self {
            InitSpec::Zero => Ok(vec![0.0; problem.dim()]),
            InitSpec::Point(theta) => {
                linalg::check_dim(problem.dim(), theta)?;
                Ok(theta.clone())
            }
            InitSpec::OptimumOffset {
                dist_sq,
                along_min_eigenvector,
            } => {
                let optimum = problem.optimum().ok_or_else(|| {
                    Error::InvalidParameter("optimum-relative init needs a known optimum".into())
                })?;
                let direction = if *along_min_eigenvector {
                    let model = problem.quadratic_model().ok_or_else(|| {
                        Error::InvalidParameter(
                            "eigenvector-aligned init needs a quadratic problem".into(),
                        )
                    })?;
                    let (k, _) = model
                        .eigenvalues()
                        .iter()
                        .enumerate()
                        .min_by(|a, b| a.1.total_cmp(b.1))
                        .expect("non-empty spectrum");
                    let mut e = vec![0.0; model.dim()];
                    e[k] = 1.0;
                    model.from_eigen(&e)
                } else {
                    let mut v = crate::rng::normal_vec(rng, problem.dim());
                    let n = linalg::norm(&v);
                    for vi in v.iter_mut() {
                        *vi /= n;
                    }
                    v
                };
                let scale = dist_sq.sqrt();
                Ok(optimum
                    .iter()
                    .zip(&direction)
                    .map(|(o, d)| o + scale * d)
                    .collect())
            }
            InitSpec::Stationary {
                gamma_old,
                burn_iters,
            } => {
                let burn = burn_iters
                    .unwrap_or_else(|| stationary_burn_floor(problem, *gamma_old).unwrap_or(0));
                sample_stationary(problem, *gamma_old, burn, rng)
            }
        }
    }
}

/// Enforced minimum burn-in ⌈20/(γμ)⌉ so the bias term decays to e⁻²⁰.
pub fn stationary_burn_floor(problem: &Problem, gamma: f64) -> Result<u64> {
    let mu = problem.constants().mu.ok_or_else(|| {
        Error::InvalidParameter("stationary sampling requires a known μ".into())
    })?;
    Ok((20.0 / (gamma * mu)).ceil() as u64)
}

/// Approximate sample from the stationary distribution π_γ: start at θ* and
/// run `burn_iters` constant-γ iterations.
pub fn sample_stationary(
    problem: &Problem,
    gamma: f64,
    burn_iters: u64,
    rng: &mut RunRng,
) -> Result<Vec<f64>> {
    if let Some(l) = problem.constants().l {
        if !(gamma > 0.0 && gamma < 1.0 / (2.0 * l)) {
            return Err(Error::InvalidParameter(format!(
                "stationary sampling requires γ ∈ (0, 1/2L) = (0, {}), got {gamma}",
                1.0 / (2.0 * l)
            )));
        }
    }
    let floor = stationary_burn_floor(problem, gamma)?;
    if burn_iters < floor {
        return Err(Error::InvalidParameter(format!(
            "burn-in {burn_iters} below the enforced floor ⌈20/(γμ)⌉ = {floor}"
        )));
    }
    let start = problem.optimum().ok_or_else(|| {
        Error::InvalidParameter("stationary sampling requires a known optimum".into())
    })?;
    let mut theta = start.to_vec();
    for _ in 0..burn_iters {
        let grad = problem.stochastic_gradient(&theta, rng)?;
        theta = crate::engine::sgd_step(&theta, &grad, gamma, problem.projection())?;
    }
    Ok(theta)
}

/// Output destinations of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub trace_path: Option<PathBuf>,
    #[serde(default)]
    pub report_path: Option<PathBuf>,
    #[serde(default)]
    pub format: export::ExportFormat,
}

/// A complete replicated experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: crate::problems::ProblemSpec,
    pub controller: ControllerConfig,
    #[serde(default = "default_init")]
    pub init: InitSpec,
    pub n_iters: u64,
    #[serde(default = "default_reps")]
    pub n_reps: u64,
    pub base_seed: u64,
    #[serde(default)]
    pub options: RunOptions,
    #[serde(default)]
    pub outputs: Option<OutputSpec>,
}

fn default_init() -> InitSpec {
    InitSpec::Zero
}

fn default_reps() -> u64 {
    1
}

/// Per-checkpoint aggregate over replications. SE fields are absent for a
/// single replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointAggregate {
    pub n: u64,
    pub mean_gamma: f64,
    pub mean_dist_sq: Option<f64>,
    pub se_dist_sq: Option<f64>,
    pub mean_gap: Option<f64>,
    pub se_gap: Option<f64>,
}

/// One point of the sign-fraction curve of the Pflug experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignPoint {
    pub n: u64,
    /// Fraction of replications with S_n ≤ 0.
    pub fraction_nonpositive: f64,
    /// Binomial standard error √(p(1−p)/n_reps).
    pub se: f64,
    pub mean_statistic: f64,
    pub se_statistic: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignCurve {
    pub points: Vec<SignPoint>,
    pub n_reps: u64,
}

/// Aggregation across seeded replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationReport {
    pub checkpoints: Vec<CheckpointAggregate>,
    /// Restart iterations per replication (successful ones).
    pub restarts: Vec<Vec<u64>>,
    /// Indices of replications that diverged; excluded from aggregates.
    pub failed: Vec<u64>,
    pub n_reps: u64,
    #[serde(default)]
    pub sign_fraction: Option<SignCurve>,
}

/// Run `n_reps` independent seeded replications and aggregate per-checkpoint
/// statistics. Divergent replications are excluded and counted. When the
/// config names a report path the report is also written there.
pub fn replicate(config: &ExperimentConfig) -> Result<ReplicationReport> {
    if config.n_reps == 0 {
        return Err(Error::InvalidParameter("n_reps must be at least 1".into()));
    }
    let problem = crate::problems::make_problem(&config.problem)?;
    let report = replicate_on(&problem, config)?;
    if let Some(outputs) = &config.outputs {
        if let Some(path) = &outputs.report_path {
            export::export_report(&report, path, outputs.format)?;
        }
    }
    Ok(report)
}

/// Like [`replicate`] but on an already-built problem (dataset problems or
/// custom quadratic models).
pub fn replicate_on(problem: &Problem, config: &ExperimentConfig) -> Result<ReplicationReport> {
    let results: Vec<std::result::Result<RunTrace, String>> = (0..config.n_reps)
        .into_par_iter()
        .map(|i| {
            let seed_i = replication_seed(config.base_seed, i);
            let mut init_rng = seeded_rng(seed_i);
            let theta0 = config
                .init
                .resolve(problem, &mut init_rng)
                .map_err(|e| e.to_string())?;
            // The run stream gets a decorrelated sub-seed so init draws and
            // gradient draws never overlap.
            run(
                problem,
                &config.controller,
                &theta0,
                config.n_iters,
                splitmix64(seed_i),
                &config.options,
            )
            .map_err(|e| match e {
                Error::Diverged { .. } => "diverged".to_string(),
                other => other.to_string(),
            })
        })
        .collect();

    let mut traces = Vec::new();
    let mut failed = Vec::new();
    for (i, res) in results.into_iter().enumerate() {
        match res {
            Ok(trace) => traces.push(trace),
            Err(msg) if msg == "diverged" => failed.push(i as u64),
            Err(msg) => return Err(Error::Config(msg)),
        }
    }
    if traces.is_empty() {
        return Err(Error::InsufficientData(
            "every replication diverged".into(),
        ));
    }
    let grid = record_grid(config.n_iters, config.options.record);
    let checkpoints = aggregate_traces(&traces, &grid);
    Ok(ReplicationReport {
        checkpoints,
        restarts: traces.iter().map(|t| t.restarts.clone()).collect(),
        failed,
        n_reps: config.n_reps,
        sign_fraction: None,
    })
}

/// Aggregate traces on the deterministic record grid (off-grid restart rows
/// are skipped so every replication contributes the same checkpoints).
pub(crate) fn aggregate_traces(traces: &[RunTrace], grid: &[u64]) -> Vec<CheckpointAggregate> {
    let mut cursors = vec![0usize; traces.len()];
    let mut out = Vec::with_capacity(grid.len());
    for &n in grid {
        let mut gammas = Vec::with_capacity(traces.len());
        let mut dists = Vec::new();
        let mut gaps = Vec::new();
        for (trace, cursor) in traces.iter().zip(cursors.iter_mut()) {
            while *cursor < trace.records.len() && trace.records[*cursor].n < n {
                *cursor += 1;
            }
            if *cursor < trace.records.len() && trace.records[*cursor].n == n {
                let rec = &trace.records[*cursor];
                gammas.push(rec.gamma);
                if let Some(d) = rec.dist_sq {
                    dists.push(d);
                }
                if let Some(g) = rec.gap {
                    gaps.push(g);
                }
            }
        }
        if gammas.is_empty() {
            continue;
        }
        let (mean_gamma, _) = mean_se(&gammas);
        let (mean_dist_sq, se_dist_sq) = if dists.len() == traces.len() {
            let (m, s) = mean_se(&dists);
            (Some(m), s)
        } else {
            (None, None)
        };
        let (mean_gap, se_gap) = if gaps.len() == traces.len() {
            let (m, s) = mean_se(&gaps);
            (Some(m), s)
        } else {
            (None, None)
        };
        out.push(CheckpointAggregate {
            n,
            mean_gamma,
            mean_dist_sq,
            se_dist_sq,
            mean_gap,
            se_gap,
        });
    }
    out
}

/// Sign experiment: draw θ₀ ~ π_{γ_old}, restart constant-step SGD at
/// γ = r·γ_old, and record the sign of the running statistic S_n on a
/// geometric grid of iterations. The fraction of replications with S_n ≤ 0
/// stays near ½ throughout the new transient, which is why thresholding the
/// sign of S_n restarts too early.
pub fn pflug_sign_experiment(
    problem: &Problem,
    gamma_old: f64,
    r: f64,
    n_max: u64,
    n_reps: u64,
    base_seed: u64,
) -> Result<SignCurve> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "decrease factor r must lie in (0, 1), got {r}"
        )));
    }
    if n_reps == 0 || n_max < 2 {
        return Err(Error::InvalidParameter(
            "need n_reps ≥ 1 and n_max ≥ 2".into(),
        ));
    }
    let burn = stationary_burn_floor(problem, gamma_old)?;
    let gamma = r * gamma_old;
    // Geometric grid; S_n needs two gradients, so it starts at n = 2.
    let grid: Vec<u64> = record_grid(n_max, crate::engine::RecordMode::Log)
        .into_iter()
        .filter(|&n| n >= 2)
        .collect();

    let per_rep: Vec<Result<Vec<f64>>> = (0..n_reps)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeded_rng(replication_seed(base_seed, i));
            // One chain per replication: burn in at γ_old, then continue the
            // same chain at the decreased step size.
            let mut theta = sample_stationary(problem, gamma_old, burn, &mut rng)?;
            let mut pflug = PflugState::new(0);
            let mut sums = Vec::with_capacity(grid.len());
            let mut next = 0usize;
            for n in 1..=n_max {
                let grad = problem.stochastic_gradient(&theta, &mut rng)?;
                theta = crate::engine::sgd_step(&theta, &grad, gamma, problem.projection())?;
                pflug_update(&mut pflug, &grad);
                while next < grid.len() && grid[next] == n {
                    sums.push(pflug.statistic().unwrap_or(0.0));
                    next += 1;
                }
            }
            Ok(sums)
        })
        .collect();

    let mut all = Vec::with_capacity(n_reps as usize);
    for r in per_rep {
        all.push(r?);
    }
    let points = grid
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let stats: Vec<f64> = all.iter().map(|s| s[j]).collect();
            let nonpos = stats.iter().filter(|&&s| s <= 0.0).count() as f64;
            let p = nonpos / n_reps as f64;
            let (mean_statistic, se_statistic) = mean_se(&stats);
            SignPoint {
                n,
                fraction_nonpositive: p,
                se: (p * (1.0 - p) / n_reps as f64).sqrt(),
                mean_statistic,
                se_statistic,
            }
        })
        .collect();
    Ok(SignCurve {
        points,
        n_reps,
    })
}

/// Least-squares slope of log(value) against log(n) over points with
/// n ∈ [window.0, window.1].
pub fn fit_loglog_slope(points: &[(f64, f64)], window: (f64, f64)) -> Result<f64> {
    let selected: Vec<(f64, f64)> = points
        .iter()
        .filter(|(n, _)| *n >= window.0 && *n <= window.1)
        .copied()
        .collect();
    if selected.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 points in the window, found {}",
            selected.len()
        )));
    }
    if selected.iter().any(|(_, v)| *v <= 0.0) {
        return Err(Error::InsufficientData(
            "log-log fit requires strictly positive values".into(),
        ));
    }
    let x: Vec<f64> = selected.iter().map(|(n, _)| n.ln()).collect();
    let y: Vec<f64> = selected.iter().map(|(_, v)| v.ln()).collect();
    Ok(ls_slope(&x, &y))
}

/// Convenience: slope of a trace-derived curve (n, value).
pub fn curve_from_checkpoints<'a>(
    checkpoints: impl IntoIterator<Item = &'a CheckpointAggregate>,
    gap: bool,
) -> Vec<(f64, f64)> {
    checkpoints
        .into_iter()
        .filter_map(|c| {
            let v = if gap { c.mean_gap } else { c.mean_dist_sq };
            v.map(|v| (c.n as f64, v))
        })
        .collect()
}

/// Build the global rayon pool from the SGDDIAG_THREADS variable. Call once
/// at process start; later calls are no-ops.
pub fn init_thread_pool_from_env() {
    if let Ok(v) = std::env::var("SGDDIAG_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

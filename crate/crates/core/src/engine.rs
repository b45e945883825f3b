//! The SGD recursion with pluggable step-size control, optional projection,
//! optional Polyak averaging, and trace recording.
//!
//! A run is strictly sequential; concurrency lives one level up in the
//! harness, where independent replications execute in parallel.

use crate::diagnostics::{apply_restart, Diagnostic, DiagnosticConfig, DistanceState, OracleState, PflugState, UcOracleState};
use crate::error::{Error, Result};
use crate::linalg;
use crate::problems::{project, Ball, Problem};
use crate::rng::seeded_rng;
use crate::schedule::{schedule_eval, Schedule};
use serde::{Deserialize, Serialize};

/// Divergence guard: abort when the iterate norm exceeds this.
const DIVERGENCE_NORM: f64 = 1e12;

/// One SGD step θ − γ·grad, projected when a ball is supplied.
pub fn sgd_step(
    theta: &[f64],
    grad: &[f64],
    gamma: f64,
    projection: Option<&Ball>,
) -> Result<Vec<f64>> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step size must be positive, got {gamma}"
        )));
    }
    linalg::check_dim(theta.len(), grad)?;
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::InvalidParameter(
            "non-finite gradient component".into(),
        ));
    }
    let mut next: Vec<f64> = theta
        .iter()
        .zip(grad)
        .map(|(t, g)| t - gamma * g)
        .collect();
    if let Some(ball) = projection {
        next = project(ball, &next);
        debug_assert!(
            linalg::dist_sq(&next, &ball.center).sqrt() <= ball.radius + 1e-12,
            "projected iterate left the ball"
        );
    }
    Ok(next)
}

/// Running Polyak average.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragingState {
    pub mean: Vec<f64>,
    pub count: u64,
}

impl AveragingState {
    pub fn new(dim: usize) -> Self {
        AveragingState {
            mean: vec![0.0; dim],
            count: 0,
        }
    }
}

/// mean ← mean + (θ − mean)/(count+1).
pub fn polyak_update(state: &mut AveragingState, theta: &[f64]) {
    state.count += 1;
    let w = 1.0 / state.count as f64;
    for (m, t) in state.mean.iter_mut().zip(theta) {
        *m += w * (*t - *m);
    }
}

/// Step-size control: a fixed schedule, or a constant step driven down by a
/// convergence diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ControllerConfig {
    Fixed { schedule: Schedule },
    Diagnostic {
        gamma0: f64,
        /// Step-size decrease factor r ∈ (0, 1).
        r: f64,
        diagnostic: DiagnosticConfig,
    },
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            ControllerConfig::Fixed { schedule } => schedule.validate(),
            ControllerConfig::Diagnostic { gamma0, r, .. } => {
                if !(*gamma0 > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "gamma0 must be positive, got {gamma0}"
                    )));
                }
                if !(*r > 0.0 && *r < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "decrease factor r must lie in (0, 1), got {r}"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Which iterations get a trace record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RecordMode {
    /// Every iteration up to 10⁴, then geometric spacing (factor 1.02).
    #[default]
    Auto,
    /// Every k-th iteration.
    Every(u64),
    /// Geometric spacing from the first iteration.
    Log,
}

/// Deterministic record grid for a run of `n_iters` iterations. Restart
/// iterations are recorded additionally when they fall off the grid.
pub fn record_grid(n_iters: u64, mode: RecordMode) -> Vec<u64> {
    let mut grid = Vec::new();
    match mode {
        RecordMode::Auto => {
            let dense = n_iters.min(10_000);
            grid.extend(1..=dense);
            let mut n = dense;
            while n < n_iters {
                n = ((n as f64) * 1.02).ceil() as u64;
                grid.push(n.min(n_iters));
            }
        }
        RecordMode::Every(k) => {
            let k = k.max(1);
            let mut n = k;
            while n <= n_iters {
                grid.push(n);
                n += k;
            }
            if grid.last() != Some(&n_iters) {
                grid.push(n_iters);
            }
        }
        RecordMode::Log => {
            let mut n = 1u64;
            while n < n_iters {
                grid.push(n);
                n = (n + 1).max(((n as f64) * 1.02).ceil() as u64);
            }
            grid.push(n_iters);
        }
    }
    grid.dedup();
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOptions {
    /// Maintain a Polyak average alongside the final iterate.
    #[serde(default)]
    pub average: bool,
    #[serde(default)]
    pub record: RecordMode,
    /// Record f(θ) − f* (or raw f) at recorded iterations.
    #[serde(default)]
    pub record_gap: bool,
    /// Evaluate recorded metrics on the running average instead of the final
    /// iterate (for averaged-SGD baselines). Implies `average`.
    #[serde(default)]
    pub metrics_on_average: bool,
    /// For fixed-schedule runs, surface ‖θ_n − θ₀‖² in the statistic column
    /// (diagnostic-driven runs put their own statistic there).
    #[serde(default)]
    pub record_anchor_dist: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            average: false,
            record: RecordMode::Auto,
            record_gap: false,
            metrics_on_average: false,
            record_anchor_dist: false,
        }
    }
}

/// One per-iteration record. Optional fields are absent when the quantity is
/// not defined for the run (unknown optimum, gap recording off, no
/// diagnostic).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub n: u64,
    pub gamma: f64,
    pub dist_sq: Option<f64>,
    pub gap: Option<f64>,
    pub statistic: Option<f64>,
    pub restart: bool,
}

/// Full output of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
    /// Iterations at which the step size was decreased.
    pub restarts: Vec<u64>,
    pub final_theta: Vec<f64>,
    /// Final Polyak average when averaging was on.
    pub final_average: Option<Vec<f64>>,
    pub seed: u64,
}

enum Controller {
    Fixed(Schedule),
    Diagnostic {
        gamma: f64,
        r: f64,
        diag: Diagnostic,
    },
}

fn build_diagnostic(
    config: &DiagnosticConfig,
    problem: &Problem,
    theta0: &[f64],
    gamma0: f64,
) -> Result<Diagnostic> {
    Ok(match config {
        DiagnosticConfig::Oracle { delta0 } => {
            let mu = problem.constants().mu.ok_or_else(|| {
                Error::InvalidParameter("oracle diagnostic requires a known μ".into())
            })?;
            let sigma_sq = problem.constants().sigma_sq.ok_or_else(|| {
                Error::InvalidParameter("oracle diagnostic requires a known σ²".into())
            })?;
            let delta = match delta0 {
                Some(d) => *d,
                None => problem
                    .dist_sq_to_optimum(theta0)
                    .ok_or_else(|| {
                        Error::InvalidParameter(
                            "oracle diagnostic requires δ₀ or a known optimum".into(),
                        )
                    })?,
            };
            if !(delta > 0.0) {
                return Err(Error::InvalidParameter(
                    "oracle diagnostic requires δ₀ > 0".into(),
                ));
            }
            Diagnostic::Oracle(OracleState {
                delta_restart: delta,
                n_since_restart: 0,
                mu,
                sigma_sq,
                gamma: gamma0,
            })
        }
        DiagnosticConfig::Pflug { burn_in } => Diagnostic::Pflug(PflugState::new(*burn_in)),
        DiagnosticConfig::Distance { thresh, q, k0 } => {
            Diagnostic::Distance(DistanceState::new(theta0.to_vec(), *q, *k0, *thresh)?)
        }
        DiagnosticConfig::UcOracle { a, b, tau } => {
            if !(*a > 0.0 && *b > 0.0) {
                return Err(Error::InvalidParameter(
                    "UC oracle constants A, B must be positive".into(),
                ));
            }
            if !(*tau > 0.0 && *tau <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "UC oracle requires τ ∈ (0, 1], got {tau}"
                )));
            }
            Diagnostic::UcOracle(UcOracleState {
                a: *a,
                b: *b,
                tau: *tau,
                gamma: gamma0,
                n_since_restart: 0,
            })
        }
    })
}

/// Execute `n_iters` SGD iterations from `theta0` with the given controller.
/// The run owns a private random stream derived from `seed`; identical
/// inputs produce a bitwise-identical trace.
pub fn run(
    problem: &Problem,
    controller: &ControllerConfig,
    theta0: &[f64],
    n_iters: u64,
    seed: u64,
    options: &RunOptions,
) -> Result<RunTrace> {
    controller.validate()?;
    linalg::check_dim(problem.dim(), theta0)?;
    if n_iters == 0 {
        return Err(Error::InvalidParameter("n_iters must be at least 1".into()));
    }
    let mut controller = match controller {
        ControllerConfig::Fixed { schedule } => Controller::Fixed(schedule.clone()),
        ControllerConfig::Diagnostic {
            gamma0,
            r,
            diagnostic,
        } => Controller::Diagnostic {
            gamma: *gamma0,
            r: *r,
            diag: build_diagnostic(diagnostic, problem, theta0, *gamma0)?,
        },
    };
    let averaging = options.average || options.metrics_on_average;
    let mut avg = averaging.then(|| AveragingState::new(problem.dim()));
    let grid = record_grid(n_iters, options.record);
    let mut grid_pos = 0usize;
    let mut records: Vec<TraceRecord> = Vec::with_capacity(grid.len());
    let mut restarts: Vec<u64> = Vec::new();

    let mut stream = problem.stream(seeded_rng(seed));
    let mut theta = theta0.to_vec();
    let mut n_since_restart = 0u64;

    for n in 1..=n_iters {
        let gamma_n = match &controller {
            Controller::Fixed(schedule) => schedule_eval(schedule, n)?,
            Controller::Diagnostic { gamma, .. } => *gamma,
        };
        let grad = stream.next_gradient(&theta)?;
        let diverged = grad.iter().any(|g| !g.is_finite());
        if !diverged {
            theta = sgd_step(&theta, &grad, gamma_n, problem.projection())?;
        }
        if diverged || theta.iter().any(|t| !t.is_finite()) || linalg::norm_sq(&theta) > DIVERGENCE_NORM * DIVERGENCE_NORM
        {
            return Err(Error::Diverged {
                iteration: n,
                trace: Box::new(RunTrace {
                    records,
                    restarts,
                    final_theta: theta,
                    final_average: avg.map(|a| a.mean),
                    seed,
                }),
            });
        }
        n_since_restart += 1;
        if let Some(avg) = avg.as_mut() {
            polyak_update(avg, &theta);
        }

        // Diagnostic sees the post-step state; a firing diagnostic changes γ
        // starting from the next iteration.
        let mut fired = false;
        if let Controller::Diagnostic { diag, .. } = &mut controller {
            fired = diag.observe(&theta, &grad, n, n_since_restart)?;
        }

        let on_grid = grid_pos < grid.len() && grid[grid_pos] == n;
        if on_grid {
            grid_pos += 1;
        }
        if on_grid || fired {
            let metric_point: &[f64] = if options.metrics_on_average {
                &avg.as_ref().expect("averaging enabled").mean
            } else {
                &theta
            };
            let statistic = match &controller {
                Controller::Diagnostic { diag, .. } => diag.statistic(&theta),
                Controller::Fixed(_) => options
                    .record_anchor_dist
                    .then(|| linalg::dist_sq(&theta, theta0)),
            };
            records.push(TraceRecord {
                n,
                gamma: gamma_n,
                dist_sq: problem.dist_sq_to_optimum(metric_point),
                gap: if options.record_gap {
                    Some(problem.objective_gap(metric_point)?.value)
                } else {
                    None
                },
                statistic,
                restart: fired,
            });
        }
        if fired {
            restarts.push(n);
            if let Controller::Diagnostic { gamma, r, diag } = &mut controller {
                *gamma = apply_restart(diag, *gamma, *r, &theta);
            }
            n_since_restart = 0;
        }
    }

    Ok(RunTrace {
        records,
        restarts,
        final_theta: theta,
        final_average: avg.map(|a| a.mean),
        seed,
    })
}

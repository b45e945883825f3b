//! Restart tests: the oracle diagnostic, Pflug's inner-product statistic,
//! the distance-based statistic, and the uniformly convex oracle variant.
//!
//! Each diagnostic is an incremental state machine fed by the engine after
//! every step; when one fires, the step size is multiplied by the decrease
//! factor r and the state is reset for the next epoch.

use crate::error::{Error, Result};
use crate::linalg;
use serde::{Deserialize, Serialize};

// ---------------------------------------------------------------------------
// Oracle diagnostic
// ---------------------------------------------------------------------------

/// State of the omniscient bias/variance comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleState {
    /// δ at the last restart: ‖θ_restart − θ*‖² (or its proof bound).
    pub delta_restart: f64,
    pub n_since_restart: u64,
    pub mu: f64,
    pub sigma_sq: f64,
    pub gamma: f64,
}

/// Bias (1−γμ)ⁿ·δ strictly below the variance floor 2γσ²/μ?
pub fn oracle_should_restart(state: &OracleState) -> Result<bool> {
    if state.gamma * state.mu >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "bias formula requires γμ < 1, got {}",
            state.gamma * state.mu
        )));
    }
    let bias = (1.0 - state.gamma * state.mu).powi(state.n_since_restart as i32)
        * state.delta_restart;
    let variance = 2.0 * state.gamma * state.sigma_sq / state.mu;
    Ok(bias < variance)
}

/// First restart time of the oracle schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstRestart {
    pub time: f64,
    pub saturated_at_start: bool,
}

/// Δn₁ = (1/(γ₀μ))·ln(μδ₀/(2γ₀σ²)); zero with a flag when the variance floor
/// already dominates at n = 0.
pub fn oracle_first_restart_time(gamma0: f64, mu: f64, sigma_sq: f64, delta0: f64) -> FirstRestart {
    assert!(gamma0 > 0.0 && mu > 0.0 && sigma_sq > 0.0 && delta0 > 0.0);
    let ratio = mu * delta0 / (2.0 * gamma0 * sigma_sq);
    if ratio <= 1.0 {
        return FirstRestart {
            time: 0.0,
            saturated_at_start: true,
        };
    }
    FirstRestart {
        time: ratio.ln() / (gamma0 * mu),
        saturated_at_start: false,
    }
}

// ---------------------------------------------------------------------------
// Pflug diagnostic
// ---------------------------------------------------------------------------

/// Running sum of inner products of consecutive stochastic gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct PflugState {
    pub sum: f64,
    pub pairs: u64,
    pub prev_grad: Option<Vec<f64>>,
    pub burn_in: u64,
}

impl PflugState {
    pub fn new(burn_in: u64) -> Self {
        PflugState {
            sum: 0.0,
            pairs: 0,
            prev_grad: None,
            burn_in,
        }
    }

    /// Running average S = sum/pairs; `None` before the first pair.
    pub fn statistic(&self) -> Option<f64> {
        (self.pairs > 0).then(|| self.sum / self.pairs as f64)
    }
}

/// Feed one stochastic gradient: accumulates ⟨prev, grad⟩ when a previous
/// gradient exists within the current epoch.
pub fn pflug_update(state: &mut PflugState, grad: &[f64]) {
    if let Some(prev) = &state.prev_grad {
        state.sum += linalg::dot(prev, grad);
        state.pairs += 1;
        state.prev_grad = Some(grad.to_vec());
    } else {
        state.prev_grad = Some(grad.to_vec());
    }
}

/// Fire iff the sum is strictly negative and the epoch is past burn-in.
pub fn pflug_should_restart(state: &PflugState, n_since_restart: u64) -> bool {
    state.sum < 0.0 && n_since_restart > state.burn_in
}

// ---------------------------------------------------------------------------
// Distance-based diagnostic
// ---------------------------------------------------------------------------

/// Log-log slope of ‖θ_n − anchor‖² between geometric checkpoints q^k.
///
/// Checkpoints live on the global iteration grid round(q^k), k ≥ k0, of the
/// surrounding run (the loop counter of the step-size controller), so the
/// diagnostic performs O(log N) slope evaluations in total. A restart
/// re-anchors the distance and clears the stored checkpoint — the next
/// checkpoint seeds the comparison for the new epoch — but does not rewind
/// the grid; rewinding it to q^{k0} after every restart lets estimate noise
/// at short spans cascade the step size to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceState {
    pub anchor: Vec<f64>,
    pub q: f64,
    pub k0: u32,
    pub thresh: f64,
    next_k: u32,
    next_checkpoint: u64,
    last_checkpoint: Option<(u64, f64)>,
    /// Total slope evaluations (checkpoint sparsity: ≤ ⌈log_q N⌉ + 1).
    pub evaluations: u64,
    last_slope: Option<f64>,
}

/// Outcome of feeding one iterate to the distance diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceOutcome {
    pub restart: bool,
    /// Slope computed at this checkpoint (absent off-checkpoint and at the
    /// seeding checkpoint). −∞ encodes a zero distance.
    pub slope: Option<f64>,
}

fn checkpoint_index(q: f64, k: u32) -> u64 {
    q.powi(k as i32).round() as u64
}

impl DistanceState {
    pub fn new(anchor: Vec<f64>, q: f64, k0: u32, thresh: f64) -> Result<Self> {
        if !(q > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "checkpoint ratio q must exceed 1, got {q}"
            )));
        }
        if !(thresh > 0.0 && thresh <= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "slope threshold must lie in (0, 2], got {thresh}"
            )));
        }
        let mut state = DistanceState {
            anchor,
            q,
            k0,
            thresh,
            next_k: k0,
            next_checkpoint: 0,
            last_checkpoint: None,
            evaluations: 0,
            last_slope: None,
        };
        state.next_checkpoint = checkpoint_index(q, k0).max(1);
        Ok(state)
    }

    /// Paper defaults (thresh, q, k0) = (0.6, 1.5, 5).
    pub fn with_defaults(anchor: Vec<f64>) -> Self {
        DistanceState::new(anchor, 1.5, 5, 0.6).expect("defaults are valid")
    }

    /// Advance to the next distinct checkpoint index after `current`
    /// (rounding can produce duplicates for small k).
    fn advance_checkpoint(&mut self, current: u64) {
        loop {
            self.next_k += 1;
            let idx = checkpoint_index(self.q, self.next_k);
            if idx > current {
                self.next_checkpoint = idx;
                return;
            }
        }
    }

    /// Feed the post-step iterate at global iteration `n`. Off checkpoints
    /// this is a no-op; at a checkpoint the slope against the stored previous
    /// checkpoint decides the restart. The first checkpoint of an epoch only
    /// seeds the comparison point.
    pub fn observe(&mut self, theta: &[f64], n: u64) -> DistanceOutcome {
        if n != self.next_checkpoint {
            return DistanceOutcome {
                restart: false,
                slope: None,
            };
        }
        let dist_sq = linalg::dist_sq(theta, &self.anchor);
        let outcome = match self.last_checkpoint {
            None => DistanceOutcome {
                restart: false,
                slope: None,
            },
            Some((n_prev, d_prev)) => {
                self.evaluations += 1;
                // θ back exactly at the anchor can only mean stationarity at
                // checkpoint scale, and log(0) must not be evaluated: fire.
                let slope = if dist_sq == 0.0 {
                    f64::NEG_INFINITY
                } else if d_prev == 0.0 {
                    f64::INFINITY
                } else {
                    (dist_sq.ln() - d_prev.ln()) / ((n as f64).ln() - (n_prev as f64).ln())
                };
                self.last_slope = Some(slope);
                DistanceOutcome {
                    restart: slope < self.thresh,
                    slope: Some(slope),
                }
            }
        };
        self.last_checkpoint = Some((n, dist_sq));
        self.advance_checkpoint(n);
        outcome
    }

    /// Re-anchor at the restart iterate; the next checkpoint on the global
    /// grid seeds the new epoch's comparison point.
    pub fn reset(&mut self, theta_restart: &[f64]) {
        self.anchor = theta_restart.to_vec();
        self.last_checkpoint = None;
        self.last_slope = None;
    }

    /// Earliest global iteration at which the diagnostic can fire.
    pub fn first_decision_index(&self) -> u64 {
        let seed = checkpoint_index(self.q, self.k0).max(1);
        let mut k = self.k0;
        loop {
            k += 1;
            let idx = checkpoint_index(self.q, k);
            if idx > seed {
                return idx;
            }
        }
    }

    /// Tracked statistic for traces: ‖θ − anchor‖².
    pub fn statistic(&self, theta: &[f64]) -> f64 {
        linalg::dist_sq(theta, &self.anchor)
    }
}

/// Functional form of the distance test (mutates and reports), matching the
/// incremental `observe`. `n` is the surrounding run's global iteration.
pub fn distance_should_restart(
    state: &mut DistanceState,
    theta: &[f64],
    n: u64,
) -> (bool, Option<f64>) {
    let out = state.observe(theta, n);
    (out.restart, out.slope)
}

// ---------------------------------------------------------------------------
// Uniformly convex oracle diagnostic
// ---------------------------------------------------------------------------

/// Bias/variance comparison on function values for uniformly convex f.
#[derive(Debug, Clone, PartialEq)]
pub struct UcOracleState {
    pub a: f64,
    pub b: f64,
    pub tau: f64,
    pub gamma: f64,
    pub n_since_restart: u64,
}

/// A·(1/(γn))^{1/τ} strictly below B·γ?
pub fn uc_oracle_should_restart(state: &UcOracleState) -> bool {
    debug_assert!(state.n_since_restart >= 1);
    let bias = state.a * (1.0 / (state.gamma * state.n_since_restart as f64)).powf(1.0 / state.tau);
    let variance = state.b * state.gamma;
    bias < variance
}

// ---------------------------------------------------------------------------
// Unified diagnostic machine
// ---------------------------------------------------------------------------

/// Configuration of a diagnostic, serde-friendly; state is built at run start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DiagnosticConfig {
    /// Needs μ and σ² from the problem; δ₀ defaults to ‖θ₀ − θ*‖².
    Oracle {
        #[serde(default)]
        delta0: Option<f64>,
    },
    Pflug {
        #[serde(default = "default_burn_in")]
        burn_in: u64,
    },
    Distance {
        #[serde(default = "default_thresh")]
        thresh: f64,
        #[serde(default = "default_q")]
        q: f64,
        #[serde(default = "default_k0")]
        k0: u32,
    },
    UcOracle { a: f64, b: f64, tau: f64 },
}

fn default_burn_in() -> u64 {
    10_000
}

fn default_thresh() -> f64 {
    0.6
}

fn default_q() -> f64 {
    1.5
}

fn default_k0() -> u32 {
    5
}

/// Live diagnostic state driven by the engine.
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    Oracle(OracleState),
    Pflug(PflugState),
    Distance(DistanceState),
    UcOracle(UcOracleState),
}

impl Diagnostic {
    /// Feed the post-step state; `true` means the step size should drop
    /// starting from the next iteration. `n` is the global iteration count,
    /// `n_since_restart` counts iterations within the current epoch.
    pub fn observe(
        &mut self,
        theta: &[f64],
        grad: &[f64],
        n: u64,
        n_since_restart: u64,
    ) -> Result<bool> {
        match self {
            Diagnostic::Oracle(state) => {
                state.n_since_restart = n_since_restart;
                oracle_should_restart(state)
            }
            Diagnostic::Pflug(state) => {
                pflug_update(state, grad);
                Ok(pflug_should_restart(state, n_since_restart))
            }
            Diagnostic::Distance(state) => Ok(state.observe(theta, n).restart),
            Diagnostic::UcOracle(state) => {
                state.n_since_restart = n_since_restart;
                Ok(uc_oracle_should_restart(state))
            }
        }
    }

    /// Value surfaced into trace records: oracle diagnostics report the
    /// bias/variance ratio, Pflug the running average, distance the squared
    /// distance to the anchor.
    pub fn statistic(&self, theta: &[f64]) -> Option<f64> {
        match self {
            Diagnostic::Oracle(state) => {
                let bias = (1.0 - state.gamma * state.mu).powi(state.n_since_restart as i32)
                    * state.delta_restart;
                let variance = 2.0 * state.gamma * state.sigma_sq / state.mu;
                Some(bias / variance)
            }
            Diagnostic::Pflug(state) => state.statistic(),
            Diagnostic::Distance(state) => Some(state.statistic(theta)),
            Diagnostic::UcOracle(state) => {
                if state.n_since_restart == 0 {
                    return None;
                }
                let bias = state.a
                    * (1.0 / (state.gamma * state.n_since_restart as f64)).powf(1.0 / state.tau);
                Some(bias / (state.b * state.gamma))
            }
        }
    }
}

/// γ ← r·γ and reset the diagnostic state for the new epoch: Pflug clears its
/// sum and pair memory (burn-in re-armed), the distance test re-anchors at
/// the restart iterate, the oracle adopts the proof bound δ ← 4σ²γ_old/μ.
/// Returns the new step size.
pub fn apply_restart(diag: &mut Diagnostic, current_gamma: f64, r: f64, theta: &[f64]) -> f64 {
    debug_assert!(r > 0.0 && r < 1.0);
    let new_gamma = r * current_gamma;
    match diag {
        Diagnostic::Oracle(state) => {
            state.delta_restart = 4.0 * state.sigma_sq * current_gamma / state.mu;
            state.n_since_restart = 0;
            state.gamma = new_gamma;
        }
        Diagnostic::Pflug(state) => {
            state.sum = 0.0;
            state.pairs = 0;
            state.prev_grad = None;
        }
        Diagnostic::Distance(state) => state.reset(theta),
        Diagnostic::UcOracle(state) => {
            state.n_since_restart = 0;
            state.gamma = new_gamma;
        }
    }
    new_gamma
}

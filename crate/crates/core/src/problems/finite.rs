//! Finite-sum problems: SVM (hinge + ridge), Lasso, dataset logistic.
//!
//! Also hosts the deterministic reference solvers that produce numerically
//! precomputed optima for these kinds.

use super::synthetic::random_basis;
use super::{Constants, OracleImpl, Problem, ProblemSpec};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::quadrature::{sigmoid, softplus};
use crate::rng::{self, RunRng};
use rand::Rng;

/// Dense sample matrix with ±1 or real labels.
#[derive(Debug, Clone)]
pub(crate) struct FiniteData {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
}

impl FiniteData {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>) -> Self {
        assert_eq!(x.len(), y.len());
        FiniteData { x, y }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.x[i]
    }

    pub fn y(&self, i: usize) -> f64 {
        self.y[i]
    }

    pub fn uniform_index(&self, rng: &mut RunRng) -> usize {
        rng.random_range(0..self.len())
    }

    pub fn x_all(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn y_all(&self) -> &[f64] {
        &self.y
    }

    /// Mean squared sample norm, the empirical tr H.
    pub fn mean_norm_sq(&self) -> f64 {
        self.x.iter().map(|xi| linalg::norm_sq(xi)).sum::<f64>() / self.len() as f64
    }

    /// Largest eigenvalue of the empirical second moment (1/n)Σxxᵀ by power
    /// iteration.
    pub fn top_gram_eigenvalue(&self) -> f64 {
        let d = self.x[0].len();
        let n = self.len() as f64;
        let mut v = vec![1.0 / (d as f64).sqrt(); d];
        let mut lambda = 0.0;
        for _ in 0..200 {
            let mut w = vec![0.0; d];
            for xi in &self.x {
                let s = linalg::dot(xi, &v) / n;
                linalg::axpy(s, xi, &mut w);
            }
            lambda = linalg::norm(&w);
            if lambda == 0.0 {
                return 0.0;
            }
            for wi in w.iter_mut() {
                *wi /= lambda;
            }
            v = w;
        }
        lambda
    }
}

fn subgrad_sign(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else if t < 0.0 {
        -1.0
    } else {
        0.0
    }
}

// ---------------------------------------------------------------------------
// Per-sample gradients and objectives
// ---------------------------------------------------------------------------

pub(crate) fn logistic_point_gradient(x: &[f64], y: f64, theta: &[f64], lambda: f64) -> Vec<f64> {
    let margin = y * linalg::dot(x, theta);
    let w = -y * sigmoid(-margin);
    x.iter()
        .zip(theta)
        .map(|(xi, ti)| w * xi + lambda * ti)
        .collect()
}

pub(crate) fn logistic_objective(data: &FiniteData, theta: &[f64], lambda: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..data.len() {
        total += softplus(-data.y(i) * linalg::dot(data.x(i), theta));
    }
    total / data.len() as f64 + 0.5 * lambda * linalg::norm_sq(theta)
}

pub(crate) fn logistic_full_gradient(data: &FiniteData, theta: &[f64], lambda: f64) -> Vec<f64> {
    let n = data.len() as f64;
    let mut g: Vec<f64> = theta.iter().map(|t| lambda * t).collect();
    for i in 0..data.len() {
        let y = data.y(i);
        let w = -y * sigmoid(-y * linalg::dot(data.x(i), theta)) / n;
        linalg::axpy(w, data.x(i), &mut g);
    }
    g
}

/// Hinge subgradient; the kink at margin 1 contributes the zero element of
/// the subdifferential.
pub(crate) fn svm_point_gradient(x: &[f64], y: f64, theta: &[f64], lambda: f64) -> Vec<f64> {
    let margin = y * linalg::dot(x, theta);
    let active = margin < 1.0;
    x.iter()
        .zip(theta)
        .map(|(xi, ti)| if active { -y * xi } else { 0.0 } + lambda * ti)
        .collect()
}

pub(crate) fn svm_objective(data: &FiniteData, theta: &[f64], lambda: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..data.len() {
        total += (1.0 - data.y(i) * linalg::dot(data.x(i), theta)).max(0.0);
    }
    total / data.len() as f64 + 0.5 * lambda * linalg::norm_sq(theta)
}

pub(crate) fn svm_full_gradient(data: &FiniteData, theta: &[f64], lambda: f64) -> Vec<f64> {
    let n = data.len() as f64;
    let mut g: Vec<f64> = theta.iter().map(|t| lambda * t).collect();
    for i in 0..data.len() {
        let y = data.y(i);
        if y * linalg::dot(data.x(i), theta) < 1.0 {
            linalg::axpy(-y / n, data.x(i), &mut g);
        }
    }
    g
}

/// Lasso per-sample subgradient of (y−⟨x,θ⟩)² + λ‖θ‖₁ with sign(0) = 0.
pub(crate) fn lasso_point_gradient(x: &[f64], y: f64, theta: &[f64], lambda: f64) -> Vec<f64> {
    let residual = y - linalg::dot(x, theta);
    x.iter()
        .zip(theta)
        .map(|(xi, ti)| -2.0 * residual * xi + lambda * subgrad_sign(*ti))
        .collect()
}

pub(crate) fn lasso_objective(data: &FiniteData, theta: &[f64], lambda: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..data.len() {
        let r = data.y(i) - linalg::dot(data.x(i), theta);
        total += r * r;
    }
    total / data.len() as f64 + lambda * theta.iter().map(|t| t.abs()).sum::<f64>()
}

pub(crate) fn lasso_full_gradient(data: &FiniteData, theta: &[f64], lambda: f64) -> Vec<f64> {
    let n = data.len() as f64;
    let mut g: Vec<f64> = theta.iter().map(|t| lambda * subgrad_sign(*t)).collect();
    for i in 0..data.len() {
        let r = data.y(i) - linalg::dot(data.x(i), theta);
        linalg::axpy(-2.0 * r / n, data.x(i), &mut g);
    }
    g
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

pub(crate) fn build_svm(spec: &ProblemSpec, rng: &mut RunRng) -> Result<Problem> {
    let n = spec.n_samples.unwrap_or(100_000);
    if n == 0 {
        return Err(Error::invalid_spec("n_samples", "need at least one sample"));
    }
    let d = spec.dim;
    let eta = spec.svm_input_variance.sqrt();
    let noise_std = spec.noise_variance.sqrt();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let xi: Vec<f64> = (0..d).map(|_| eta * rng::normal(rng)).collect();
        let z = noise_std * rng::normal(rng);
        y.push(if xi[0] + z >= 0.0 { 1.0 } else { -1.0 });
        x.push(xi);
    }
    let data = FiniteData::new(x, y);
    let constants = Constants {
        mu: (spec.regularization > 0.0).then_some(spec.regularization),
        l: None,
        sigma_sq: None,
        r_sq: Some(data.mean_norm_sq()),
        grad_bound: None,
        uc_tau: None,
    };
    Ok(Problem::assemble(
        spec.clone(),
        OracleImpl::Svm {
            data,
            lambda: spec.regularization,
        },
        None,
        constants,
    ))
}

pub(crate) fn build_lasso(spec: &ProblemSpec, rng: &mut RunRng) -> Result<Problem> {
    let n = spec.n_samples.unwrap_or(80);
    if n == 0 {
        return Err(Error::invalid_spec("n_samples", "need at least one sample"));
    }
    let d = spec.dim;
    let s = spec.sparsity.unwrap_or_else(|| d.min(60));
    if s > d {
        return Err(Error::invalid_spec("sparsity", "sparsity exceeds dimension"));
    }
    let eigenvalues = spec.eigen_decay.eigenvalues(d)?;
    let basis = random_basis(d, rng);
    let design = super::synthetic::GaussianDesign::new(eigenvalues, basis);
    // s-sparse generative vector with ±1/√s entries on a seeded support.
    let mut support: Vec<usize> = (0..d).collect();
    for i in 0..s {
        let j = rng.random_range(i..d);
        support.swap(i, j);
    }
    let mut theta_tilde = vec![0.0; d];
    for &idx in &support[..s] {
        let sign = if rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 };
        theta_tilde[idx] = sign * spec.optimum_norm / (s as f64).sqrt();
    }
    let noise_std = spec.noise_variance.sqrt();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let xi = design.sample(rng);
        y.push(linalg::dot(&xi, &theta_tilde) + noise_std * rng::normal(rng));
        x.push(xi);
    }
    let data = FiniteData::new(x, y);
    let constants = Constants {
        mu: None,
        l: Some(2.0 * data.top_gram_eigenvalue()),
        sigma_sq: None,
        r_sq: Some(data.mean_norm_sq()),
        grad_bound: None,
        uc_tau: None,
    };
    Ok(Problem::assemble(
        spec.clone(),
        OracleImpl::Lasso {
            data,
            lambda: spec.regularization,
        },
        None,
        constants,
    ))
}

pub(crate) fn build_dataset_logistic(dataset: &Dataset, lambda: f64, seed: u64) -> Result<Problem> {
    let d = dataset.dim();
    let gather = |idx: &[usize]| {
        FiniteData::new(
            idx.iter().map(|&i| dataset.features(i).to_vec()).collect(),
            idx.iter().map(|&i| dataset.label(i)).collect(),
        )
    };
    let train = gather(dataset.train_indices());
    let test = gather(dataset.test_indices());
    if train.len() == 0 || test.len() == 0 {
        return Err(Error::invalid_spec(
            "dataset",
            "both splits must be non-empty",
        ));
    }
    let spec = ProblemSpec {
        kind: super::ProblemKind::DatasetLogistic,
        regularization: lambda,
        ..ProblemSpec::logistic(d, seed)
    };
    let constants = Constants {
        mu: (lambda > 0.0).then_some(lambda),
        l: Some(train.top_gram_eigenvalue() / 4.0 + lambda),
        sigma_sq: None,
        r_sq: Some(train.mean_norm_sq()),
        grad_bound: None,
        uc_tau: None,
    };
    Ok(Problem::assemble(
        spec,
        OracleImpl::DatasetLogistic {
            train,
            test,
            lambda,
        },
        None,
        constants,
    ))
}

// ---------------------------------------------------------------------------
// Reference optima
// ---------------------------------------------------------------------------

/// Outcome of a deterministic reference solve; `tolerance_metric` is the
/// certificate named in `metric`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceReport {
    pub metric: &'static str,
    pub tolerance_metric: f64,
    pub iterations: u64,
}

pub(crate) fn attach_reference_optimum(mut problem: Problem) -> Result<(Problem, ReferenceReport)> {
    let (theta, report) = match &problem.oracle {
        OracleImpl::Lasso { data, lambda } => lasso_reference(data, *lambda),
        OracleImpl::Svm { data, lambda } => svm_reference(data, *lambda)?,
        OracleImpl::DatasetLogistic { test, lambda, .. } => {
            // The exported objective is the test-set loss, so the reference
            // optimum minimizes that quantity.
            logistic_reference(test, *lambda)
        }
        _ => {
            return Err(Error::InvalidParameter(
                "reference optima are computed for finite-sum problems only; \
                 quadratic and synthetic logistic problems carry exact optima"
                    .into(),
            ))
        }
    };
    problem.optimum = Some(theta);
    problem.optimum_objective = problem
        .optimum
        .as_ref()
        .map(|t| problem.objective(t).expect("dimension checked"));
    Ok((problem, report))
}

/// FISTA on the smooth part with soft-threshold prox; the certificate is the
/// prox-gradient residual ‖θ − prox(θ − s∇g)‖/s.
fn lasso_reference(data: &FiniteData, lambda: f64) -> (Vec<f64>, ReferenceReport) {
    let d = data.x(0).len();
    let n = data.len() as f64;
    // Precompute Σ̂ = (2/n)XᵀX and b = (2/n)Xᵀy so each step is O(d²).
    let mut gram = Matrix::zeros(d, d);
    let mut b = vec![0.0; d];
    for i in 0..data.len() {
        let xi = data.x(i);
        for p in 0..d {
            let w = 2.0 * xi[p] / n;
            b[p] += w * data.y(i);
            for q in 0..d {
                gram[(p, q)] += w * xi[q];
            }
        }
    }
    let l_smooth = (2.0 * data.top_gram_eigenvalue()).max(1e-12);
    let step = 1.0 / l_smooth;
    let soft = |t: f64, k: f64| {
        if t > k {
            t - k
        } else if t < -k {
            t + k
        } else {
            0.0
        }
    };
    let mut theta = vec![0.0; d];
    let mut momentum = theta.clone();
    let mut t_acc = 1.0f64;
    let mut residual = f64::INFINITY;
    let mut iterations = 0u64;
    for it in 0..500_000u64 {
        iterations = it + 1;
        let mut grad = gram.matvec(&momentum);
        for (g, bi) in grad.iter_mut().zip(&b) {
            *g -= bi;
        }
        let next: Vec<f64> = momentum
            .iter()
            .zip(&grad)
            .map(|(m, g)| soft(m - step * g, step * lambda))
            .collect();
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_acc * t_acc).sqrt());
        let beta = (t_acc - 1.0) / t_next;
        momentum = next
            .iter()
            .zip(&theta)
            .map(|(nx, old)| nx + beta * (nx - old))
            .collect();
        t_acc = t_next;
        theta = next;
        if it % 100 == 0 {
            let mut g = gram.matvec(&theta);
            for (gi, bi) in g.iter_mut().zip(&b) {
                *gi -= bi;
            }
            let prox: Vec<f64> = theta
                .iter()
                .zip(&g)
                .map(|(t, gi)| soft(t - step * gi, step * lambda))
                .collect();
            residual = linalg::dist_sq(&theta, &prox).sqrt() / step;
            if residual <= 1e-8 {
                break;
            }
        }
    }
    (
        theta,
        ReferenceReport {
            metric: "prox-gradient residual",
            tolerance_metric: residual,
            iterations,
        },
    )
}

/// Cyclic dual coordinate ascent for hinge + ridge; the certificate is the
/// duality gap, which upper-bounds the primal suboptimality.
fn svm_reference(data: &FiniteData, lambda: f64) -> Result<(Vec<f64>, ReferenceReport)> {
    if lambda <= 0.0 {
        return Err(Error::InvalidParameter(
            "the SVM reference solve requires a positive ridge term".into(),
        ));
    }
    let d = data.x(0).len();
    let n = data.len();
    let nf = n as f64;
    let norms: Vec<f64> = (0..n).map(|i| linalg::norm_sq(data.x(i))).collect();
    let mut alpha = vec![0.0f64; n];
    let mut theta = vec![0.0f64; d];
    let mut gap = f64::INFINITY;
    let mut iterations = 0u64;
    for pass in 0..2_000u64 {
        iterations = pass + 1;
        for i in 0..n {
            if norms[i] == 0.0 {
                continue;
            }
            let y = data.y(i);
            let margin = y * linalg::dot(data.x(i), &theta);
            let raw = alpha[i] + (1.0 - margin) * lambda * nf / norms[i];
            let new = raw.clamp(0.0, 1.0);
            let delta = new - alpha[i];
            if delta != 0.0 {
                alpha[i] = new;
                linalg::axpy(delta * y / (lambda * nf), data.x(i), &mut theta);
            }
        }
        let primal = svm_objective(data, &theta, lambda);
        let dual =
            alpha.iter().sum::<f64>() / nf - 0.5 * lambda * linalg::norm_sq(&theta);
        gap = primal - dual;
        if gap <= 1e-9 {
            break;
        }
    }
    Ok((
        theta,
        ReferenceReport {
            metric: "duality gap",
            tolerance_metric: gap,
            iterations,
        },
    ))
}

/// Full-batch gradient descent with backtracking for the (ridge-)logistic
/// reference; the certificate is the gradient norm.
fn logistic_reference(data: &FiniteData, lambda: f64) -> (Vec<f64>, ReferenceReport) {
    let d = data.x(0).len();
    let mut theta = vec![0.0; d];
    let mut step = 1.0 / (data.top_gram_eigenvalue() / 4.0 + lambda).max(1e-12);
    let mut grad_norm = f64::INFINITY;
    let mut iterations = 0u64;
    for it in 0..200_000u64 {
        iterations = it + 1;
        let grad = logistic_full_gradient(data, &theta, lambda);
        grad_norm = linalg::norm(&grad);
        if grad_norm <= 1e-6 {
            break;
        }
        let f0 = logistic_objective(data, &theta, lambda);
        loop {
            let candidate: Vec<f64> = theta
                .iter()
                .zip(&grad)
                .map(|(t, g)| t - step * g)
                .collect();
            let f1 = logistic_objective(data, &candidate, lambda);
            if f1 <= f0 - 0.5 * step * grad_norm * grad_norm {
                theta = candidate;
                step *= 1.1;
                break;
            }
            step *= 0.5;
            if step < 1e-18 {
                theta = candidate;
                break;
            }
        }
    }
    (
        theta,
        ReferenceReport {
            metric: "gradient norm",
            tolerance_metric: grad_norm,
            iterations,
        },
    )
}

//! Objective functions with stochastic gradient oracles.
//!
//! Synthetic problems (least-squares, semi-stochastic quadratic, logistic,
//! SVM, Lasso, uniformly convex norm) are deterministic functions of
//! [`ProblemSpec::seed`]; dataset-backed logistic regression wraps a loaded [`Dataset`]. All
//! oracles are unbiased by construction, and problems are immutable after
//! construction so they can be shared across concurrent runs.

mod finite;
mod logistic_math;
mod synthetic;

pub use finite::ReferenceReport;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg;
use crate::quadratic_oracle::QuadraticModel;
use crate::rng::{self, seeded_rng, RunRng};
use finite::FiniteData;
use serde::{Deserialize, Serialize};
use synthetic::GaussianDesign;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    LeastSquares,
    SemiStochasticQuadratic,
    Logistic,
    SvmHinge,
    Lasso,
    UniformlyConvexNorm,
    DatasetLogistic,
}

/// Spectrum of the input covariance / Hessian H.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenDecay {
    /// Eigenvalues 1/k, k = 1..d.
    InverseK,
    /// Eigenvalues 1/k³, k = 1..d.
    InverseKCubed,
    Explicit(Vec<f64>),
}

impl EigenDecay {
    pub fn eigenvalues(&self, dim: usize) -> Result<Vec<f64>> {
        let vals = match self {
            EigenDecay::InverseK => (1..=dim).map(|k| 1.0 / k as f64).collect(),
            EigenDecay::InverseKCubed => (1..=dim).map(|k| 1.0 / (k as f64).powi(3)).collect(),
            EigenDecay::Explicit(v) => v.clone(),
        };
        if vals.len() != dim {
            return Err(Error::invalid_spec(
                "eigen_decay",
                format!("expected {dim} eigenvalues, got {}", vals.len()),
            ));
        }
        if vals.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::invalid_spec(
                "eigen_decay",
                "all eigenvalues must be strictly positive",
            ));
        }
        Ok(vals)
    }
}

/// Euclidean projection ball, serde-friendly form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallSpec {
    /// Center; empty means the origin in the problem dimension.
    #[serde(default)]
    pub center: Vec<f64>,
    pub radius: f64,
}

/// Declarative problem description; generated data is a deterministic
/// function of `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub dim: usize,
    #[serde(default = "default_decay")]
    pub eigen_decay: EigenDecay,
    /// Generative noise variance (label noise for regression problems,
    /// additive gradient noise variance otherwise).
    #[serde(default = "one")]
    pub noise_variance: f64,
    /// λ for regularized problems (SVM ridge, Lasso ℓ₁, dataset logistic ridge).
    #[serde(default)]
    pub regularization: f64,
    /// ρ > 2, uniformly convex norm only.
    #[serde(default)]
    pub uc_exponent: Option<f64>,
    /// Sparsity s of the Lasso generative model.
    #[serde(default)]
    pub sparsity: Option<usize>,
    /// Sample count for finite-sum problems (SVM, Lasso).
    #[serde(default)]
    pub n_samples: Option<usize>,
    /// ‖θ*‖ of the generative optimum for least-squares / logistic / Lasso.
    #[serde(default = "one")]
    pub optimum_norm: f64,
    /// η² of the SVM input distribution N(0, η²I).
    #[serde(default = "default_svm_input_variance")]
    pub svm_input_variance: f64,
    #[serde(default)]
    pub projection: Option<BallSpec>,
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

fn default_decay() -> EigenDecay {
    EigenDecay::InverseK
}

fn default_svm_input_variance() -> f64 {
    25.0
}

impl ProblemSpec {
    /// Least-squares with the 1/k spectrum.
    pub fn least_squares(dim: usize, noise_variance: f64, seed: u64) -> Self {
        ProblemSpec {
            kind: ProblemKind::LeastSquares,
            dim,
            eigen_decay: EigenDecay::InverseK,
            noise_variance,
            regularization: 0.0,
            uc_exponent: None,
            sparsity: None,
            n_samples: None,
            optimum_norm: 1.0,
            svm_input_variance: default_svm_input_variance(),
            projection: None,
            seed,
        }
    }

    pub fn semi_stochastic(dim: usize, noise_variance: f64, seed: u64) -> Self {
        ProblemSpec {
            kind: ProblemKind::SemiStochasticQuadratic,
            ..ProblemSpec::least_squares(dim, noise_variance, seed)
        }
    }

    pub fn logistic(dim: usize, seed: u64) -> Self {
        ProblemSpec {
            kind: ProblemKind::Logistic,
            noise_variance: 0.0,
            ..ProblemSpec::least_squares(dim, 0.0, seed)
        }
    }

    /// SVM with the defaults η² = 25, σ = 1, λ = 0.1.
    pub fn svm(dim: usize, n_samples: usize, seed: u64) -> Self {
        ProblemSpec {
            kind: ProblemKind::SvmHinge,
            regularization: 0.1,
            n_samples: Some(n_samples),
            ..ProblemSpec::least_squares(dim, 1.0, seed)
        }
    }

    /// Lasso with the defaults n = 80, d = 100, s = 60, σ = 0.1, λ = 1e-4.
    pub fn lasso(seed: u64) -> Self {
        ProblemSpec {
            kind: ProblemKind::Lasso,
            dim: 100,
            eigen_decay: EigenDecay::InverseKCubed,
            noise_variance: 0.01,
            regularization: 1e-4,
            sparsity: Some(60),
            n_samples: Some(80),
            ..ProblemSpec::least_squares(100, 0.01, seed)
        }
    }

    /// (1/ρ)‖θ‖^ρ with additive standard Gaussian gradient noise and a
    /// projection ball of the given radius around the origin.
    pub fn uniformly_convex(dim: usize, rho: f64, radius: f64, seed: u64) -> Self {
        ProblemSpec {
            kind: ProblemKind::UniformlyConvexNorm,
            uc_exponent: Some(rho),
            projection: Some(BallSpec {
                center: Vec::new(),
                radius,
            }),
            ..ProblemSpec::least_squares(dim, 1.0, seed)
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::invalid_spec("dim", "dimension must be at least 1"));
        }
        if !(self.noise_variance >= 0.0) {
            return Err(Error::invalid_spec(
                "noise_variance",
                "noise variance must be non-negative",
            ));
        }
        if self.regularization < 0.0 {
            return Err(Error::invalid_spec(
                "regularization",
                "regularization must be non-negative",
            ));
        }
        if self.kind == ProblemKind::UniformlyConvexNorm {
            match self.uc_exponent {
                Some(rho) if rho > 2.0 => {}
                Some(rho) => {
                    return Err(Error::invalid_spec(
                        "uc_exponent",
                        format!("uniform convexity requires ρ > 2, got {rho}"),
                    ))
                }
                None => {
                    return Err(Error::invalid_spec(
                        "uc_exponent",
                        "uniformly convex norm requires ρ",
                    ))
                }
            }
        }
        if let Some(s) = self.sparsity {
            if s == 0 || s > self.dim {
                return Err(Error::invalid_spec(
                    "sparsity",
                    format!("sparsity must be in 1..=dim, got {s}"),
                ));
            }
        }
        if let Some(ball) = &self.projection {
            if !(ball.radius > 0.0) {
                return Err(Error::invalid_spec("projection", "radius must be positive"));
            }
            if !ball.center.is_empty() && ball.center.len() != self.dim {
                return Err(Error::invalid_spec(
                    "projection",
                    "center dimension does not match dim",
                ));
            }
        }
        Ok(())
    }
}

/// Known constants of a problem; absent when the quantity is not defined
/// (e.g. no strong convexity) or not cheaply computable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Constants {
    /// Strong convexity constant μ.
    pub mu: Option<f64>,
    /// Smoothness constant L.
    pub l: Option<f64>,
    /// Bound on E‖ε(θ*)‖².
    pub sigma_sq: Option<f64>,
    /// tr H of the input covariance.
    pub r_sq: Option<f64>,
    /// Bound G with E‖f'ᵢ(θ)‖² ≤ G² on the feasible set.
    pub grad_bound: Option<f64>,
    /// τ = 1 − 2/ρ for uniformly convex problems.
    pub uc_tau: Option<f64>,
}

/// Euclidean ball used for projected SGD.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

/// Project θ onto the ball: identity inside, radial rescale outside.
/// The returned point measures inside the ball, so projecting twice
/// returns the first result unchanged (exact idempotence).
pub fn project(ball: &Ball, theta: &[f64]) -> Vec<f64> {
    let diff = linalg::sub(theta, &ball.center);
    let dist = linalg::norm(&diff);
    if dist <= ball.radius {
        return theta.to_vec();
    }
    let mut scale = ball.radius / dist;
    loop {
        let p: Vec<f64> = ball
            .center
            .iter()
            .zip(&diff)
            .map(|(c, d)| c + scale * d)
            .collect();
        // Rounding can leave the rescaled point an ulp outside; shrink the
        // scale until the measured distance is within the radius.
        if linalg::dist_sq(&p, &ball.center).sqrt() <= ball.radius {
            return p;
        }
        scale *= 1.0 - 4.0 * f64::EPSILON;
    }
}

/// Objective value returned by [`Problem::objective_gap`]. When the optimum
/// is unknown the raw objective is returned with `is_gap == false`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveValue {
    pub value: f64,
    pub is_gap: bool,
}

#[derive(Debug, Clone)]
pub(crate) enum OracleImpl {
    /// Sampled-data least squares: x ~ N(0,H), y = ⟨x,θ*⟩ + ε.
    LeastSquares {
        design: GaussianDesign,
        noise_std: f64,
        model: QuadraticModel,
    },
    /// f(θ) = ½(θ−θ*)ᵀH(θ−θ*) with additive gradient noise ξ ~ N(0, C).
    SemiStochastic { model: QuadraticModel },
    Logistic {
        design: GaussianDesign,
        math: logistic_math::LogisticMath,
    },
    Svm {
        data: FiniteData,
        lambda: f64,
    },
    Lasso {
        data: FiniteData,
        lambda: f64,
    },
    UcNorm {
        rho: f64,
        noise_std: f64,
    },
    DatasetLogistic {
        train: FiniteData,
        test: FiniteData,
        lambda: f64,
    },
}

/// A fully built problem: oracle, constants, optional optimum and projection.
#[derive(Debug, Clone)]
pub struct Problem {
    spec: ProblemSpec,
    oracle: OracleImpl,
    optimum: Option<Vec<f64>>,
    optimum_objective: Option<f64>,
    constants: Constants,
    projection: Option<Ball>,
}

/// Build a problem from its spec. Generated data and the optimum are a
/// deterministic function of `(spec, seed)`.
pub fn make_problem(spec: &ProblemSpec) -> Result<Problem> {
    Problem::build(spec)
}

impl Problem {
    pub fn build(spec: &ProblemSpec) -> Result<Problem> {
        spec.validate()?;
        let mut rng = seeded_rng(spec.seed);
        let d = spec.dim;
        let projection = spec.projection.as_ref().map(|b| Ball {
            center: if b.center.is_empty() {
                vec![0.0; d]
            } else {
                b.center.clone()
            },
            radius: b.radius,
        });
        let mut problem = match spec.kind {
            ProblemKind::LeastSquares => synthetic::build_least_squares(spec, &mut rng)?,
            ProblemKind::SemiStochasticQuadratic => {
                synthetic::build_semi_stochastic(spec, &mut rng)?
            }
            ProblemKind::Logistic => synthetic::build_logistic(spec, &mut rng)?,
            ProblemKind::SvmHinge => finite::build_svm(spec, &mut rng)?,
            ProblemKind::Lasso => finite::build_lasso(spec, &mut rng)?,
            ProblemKind::UniformlyConvexNorm => synthetic::build_uc_norm(spec, &projection)?,
            ProblemKind::DatasetLogistic => {
                return Err(Error::invalid_spec(
                    "kind",
                    "dataset-backed problems are built with Problem::from_dataset",
                ))
            }
        };
        problem.projection = projection;
        Ok(problem)
    }

    /// Additive-noise quadratic problem directly from a model (arbitrary
    /// noise covariance, e.g. C = σ²H to mimic least-squares noise).
    pub fn from_quadratic(model: QuadraticModel, seed: u64) -> Problem {
        let spec = ProblemSpec::semi_stochastic(model.dim(), 0.0, seed);
        synthetic::problem_from_model(spec, model)
    }

    /// Logistic regression on a loaded dataset with optional ℓ₂ term.
    /// Streams training samples without replacement, one pass at a time;
    /// the objective is the test-set average loss.
    pub fn from_dataset(dataset: &Dataset, lambda: f64, seed: u64) -> Result<Problem> {
        finite::build_dataset_logistic(dataset, lambda, seed)
    }

    pub(crate) fn assemble(
        spec: ProblemSpec,
        oracle: OracleImpl,
        optimum: Option<Vec<f64>>,
        constants: Constants,
    ) -> Problem {
        let mut p = Problem {
            spec,
            oracle,
            optimum,
            optimum_objective: None,
            constants,
            projection: None,
        };
        p.optimum_objective = p
            .optimum
            .clone()
            .map(|theta| p.objective(&theta).expect("optimum has the right dimension"));
        p
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn kind(&self) -> ProblemKind {
        self.spec.kind
    }

    pub fn constants(&self) -> &Constants {
        &self.constants
    }

    pub fn optimum(&self) -> Option<&[f64]> {
        self.optimum.as_deref()
    }

    pub fn projection(&self) -> Option<&Ball> {
        self.projection.as_ref()
    }

    pub fn with_projection(mut self, ball: Ball) -> Self {
        self.projection = Some(ball);
        self
    }

    /// Spectral view of the quadratic problems (exact H, C, θ*); `None` for
    /// non-quadratic kinds.
    pub fn quadratic_model(&self) -> Option<&QuadraticModel> {
        match &self.oracle {
            OracleImpl::LeastSquares { model, .. } | OracleImpl::SemiStochastic { model } => {
                Some(model)
            }
            _ => None,
        }
    }

    /// One unbiased stochastic gradient draw at θ. Finite-sum problems pick
    /// a sample uniformly; use [`Problem::stream`] for the one-pass
    /// without-replacement order used by experiment runs.
    pub fn stochastic_gradient(&self, theta: &[f64], rng: &mut RunRng) -> Result<Vec<f64>> {
        linalg::check_dim(self.dim(), theta)?;
        Ok(match &self.oracle {
            OracleImpl::LeastSquares {
                design, noise_std, ..
            } => {
                let x = design.sample(rng);
                let eps = *noise_std * rng::normal(rng);
                let residual = linalg::dot(&x, theta)
                    - linalg::dot(&x, self.optimum.as_ref().expect("quadratics have an optimum"))
                    - eps;
                x.iter().map(|xi| xi * residual).collect()
            }
            OracleImpl::SemiStochastic { model } => {
                let eta = linalg::sub(theta, model.theta_star());
                let mut g = model.apply_hessian(&eta);
                let xi = model.from_eigen(&model.sample_noise_eigen(rng));
                linalg::axpy(-1.0, &xi, &mut g);
                g
            }
            OracleImpl::Logistic { design, math } => {
                let x = design.sample(rng);
                let y = math.sample_label(&x, rng);
                finite::logistic_point_gradient(&x, y, theta, 0.0)
            }
            OracleImpl::Svm { data, lambda } => {
                let i = data.uniform_index(rng);
                finite::svm_point_gradient(data.x(i), data.y(i), theta, *lambda)
            }
            OracleImpl::Lasso { data, lambda } => {
                let i = data.uniform_index(rng);
                finite::lasso_point_gradient(data.x(i), data.y(i), theta, *lambda)
            }
            OracleImpl::UcNorm { rho, noise_std } => {
                let mut g = synthetic::uc_gradient(theta, *rho);
                for gi in g.iter_mut() {
                    *gi += *noise_std * rng::normal(rng);
                }
                g
            }
            OracleImpl::DatasetLogistic { train, lambda, .. } => {
                let i = train.uniform_index(rng);
                finite::logistic_point_gradient(train.x(i), train.y(i), theta, *lambda)
            }
        })
    }

    /// Raw objective f(θ) (exact for synthetic problems, test-set average
    /// for dataset problems).
    pub fn objective(&self, theta: &[f64]) -> Result<f64> {
        linalg::check_dim(self.dim(), theta)?;
        Ok(match &self.oracle {
            OracleImpl::LeastSquares {
                model, noise_std, ..
            } => {
                // ½ηᵀHη + ½σ²; the constant keeps f equal to the population risk.
                let eta = linalg::sub(theta, model.theta_star());
                0.5 * linalg::dot(&eta, &model.apply_hessian(&eta)) + 0.5 * noise_std * noise_std
            }
            OracleImpl::SemiStochastic { model } => {
                let eta = linalg::sub(theta, model.theta_star());
                0.5 * linalg::dot(&eta, &model.apply_hessian(&eta))
            }
            OracleImpl::Logistic { math, .. } => math.objective(theta),
            OracleImpl::Svm { data, lambda } => finite::svm_objective(data, theta, *lambda),
            OracleImpl::Lasso { data, lambda } => finite::lasso_objective(data, theta, *lambda),
            OracleImpl::UcNorm { rho, .. } => linalg::norm(theta).powf(*rho) / rho,
            OracleImpl::DatasetLogistic { test, lambda, .. } => {
                finite::logistic_objective(test, theta, *lambda)
            }
        })
    }

    /// f(θ) − f(θ*) when the optimum is known, else raw f(θ) flagged as
    /// ungapped.
    pub fn objective_gap(&self, theta: &[f64]) -> Result<ObjectiveValue> {
        let value = self.objective(theta)?;
        match self.optimum_objective {
            Some(f_star) => Ok(ObjectiveValue {
                value: value - f_star,
                is_gap: true,
            }),
            None => Ok(ObjectiveValue {
                value,
                is_gap: false,
            }),
        }
    }

    /// Exact full gradient where analytically available, full-data summation
    /// for finite sums. Used by unbiasedness checks and reference solvers.
    pub fn full_gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        linalg::check_dim(self.dim(), theta)?;
        Ok(match &self.oracle {
            OracleImpl::LeastSquares { model, .. } | OracleImpl::SemiStochastic { model } => {
                let eta = linalg::sub(theta, model.theta_star());
                model.apply_hessian(&eta)
            }
            OracleImpl::Logistic { math, .. } => math.full_gradient(theta),
            OracleImpl::Svm { data, lambda } => finite::svm_full_gradient(data, theta, *lambda),
            OracleImpl::Lasso { data, lambda } => finite::lasso_full_gradient(data, theta, *lambda),
            OracleImpl::UcNorm { rho, .. } => synthetic::uc_gradient(theta, *rho),
            OracleImpl::DatasetLogistic { train, lambda, .. } => {
                finite::logistic_full_gradient(train, theta, *lambda)
            }
        })
    }

    /// Distance to the optimum, if known.
    pub fn dist_sq_to_optimum(&self, theta: &[f64]) -> Option<f64> {
        self.optimum.as_ref().map(|o| linalg::dist_sq(o, theta))
    }

    /// Per-run gradient stream. Finite-sum problems iterate a seeded shuffle
    /// of the data, one pass at a time (reshuffled between passes); synthetic
    /// problems draw fresh samples.
    pub fn stream(&self, rng: RunRng) -> GradientStream<'_> {
        let order = match &self.oracle {
            OracleImpl::Svm { data, .. }
            | OracleImpl::Lasso { data, .. }
            | OracleImpl::DatasetLogistic { train: data, .. } => Some(PassOrder::new(data.len())),
            _ => None,
        };
        GradientStream {
            problem: self,
            rng,
            order,
        }
    }

    fn indexed_gradient(&self, theta: &[f64], index: usize) -> Vec<f64> {
        match &self.oracle {
            OracleImpl::Svm { data, lambda } => {
                finite::svm_point_gradient(data.x(index), data.y(index), theta, *lambda)
            }
            OracleImpl::Lasso { data, lambda } => {
                finite::lasso_point_gradient(data.x(index), data.y(index), theta, *lambda)
            }
            OracleImpl::DatasetLogistic { train, lambda, .. } => {
                finite::logistic_point_gradient(train.x(index), train.y(index), theta, *lambda)
            }
            _ => unreachable!("indexed gradients only exist for finite sums"),
        }
    }

    /// Compute a reference optimum for the finite-sum problems (Lasso, SVM,
    /// dataset logistic) and attach it. Quadratics and synthetic logistic
    /// already carry their exact optimum.
    pub fn with_reference_optimum(self) -> Result<(Problem, ReferenceReport)> {
        finite::attach_reference_optimum(self)
    }

    /// Generated or loaded samples of the finite-sum problems; `None` for
    /// streaming synthetic kinds. Dataset problems expose the training split.
    pub fn samples(&self) -> Option<(&[Vec<f64>], &[f64])> {
        match &self.oracle {
            OracleImpl::Svm { data, .. }
            | OracleImpl::Lasso { data, .. }
            | OracleImpl::DatasetLogistic { train: data, .. } => {
                Some((data.x_all(), data.y_all()))
            }
            _ => None,
        }
    }
}

struct PassOrder {
    perm: Vec<u32>,
    cursor: usize,
    fresh: bool,
}

impl PassOrder {
    fn new(n: usize) -> Self {
        PassOrder {
            perm: (0..n as u32).collect(),
            cursor: 0,
            fresh: true,
        }
    }

    fn next(&mut self, rng: &mut RunRng) -> usize {
        use rand::seq::SliceRandom;
        if self.fresh || self.cursor >= self.perm.len() {
            self.perm.shuffle(rng);
            self.cursor = 0;
            self.fresh = false;
        }
        let i = self.perm[self.cursor] as usize;
        self.cursor += 1;
        i
    }
}

/// Owns the private random stream of one run; see [`Problem::stream`].
pub struct GradientStream<'p> {
    problem: &'p Problem,
    rng: RunRng,
    order: Option<PassOrder>,
}

impl GradientStream<'_> {
    pub fn next_gradient(&mut self, theta: &[f64]) -> Result<Vec<f64>> {
        match &mut self.order {
            None => self.problem.stochastic_gradient(theta, &mut self.rng),
            Some(order) => {
                linalg::check_dim(self.problem.dim(), theta)?;
                let i = order.next(&mut self.rng);
                Ok(self.problem.indexed_gradient(theta, i))
            }
        }
    }

    pub fn rng_mut(&mut self) -> &mut RunRng {
        &mut self.rng
    }
}

#[cfg(test)]
mod tests;

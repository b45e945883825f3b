//! Generators for the synthetic problem families.

use super::{Constants, OracleImpl, Problem, ProblemSpec};
use crate::error::Result;
use crate::linalg::{self, Matrix};
use crate::quadratic_oracle::QuadraticModel;
use crate::rng::{self, RunRng};

use super::logistic_math::LogisticMath;
use super::Ball;

/// Gaussian input design x ~ N(0, H) with H = U·diag(h)·Uᵀ.
#[derive(Debug, Clone)]
pub(crate) struct GaussianDesign {
    eigenvalues: Vec<f64>,
    basis: Matrix,
    /// x = factor · z for z standard normal; factor = U·diag(√h).
    factor: Matrix,
}

impl GaussianDesign {
    pub fn new(eigenvalues: Vec<f64>, basis: Matrix) -> Self {
        let d = eigenvalues.len();
        let mut factor = basis.clone();
        for i in 0..d {
            for j in 0..d {
                factor[(i, j)] *= eigenvalues[j].sqrt();
            }
        }
        GaussianDesign {
            eigenvalues,
            basis,
            factor,
        }
    }

    pub fn sample(&self, rng: &mut RunRng) -> Vec<f64> {
        let z = rng::normal_vec(rng, self.eigenvalues.len());
        self.factor.matvec(&z)
    }

    pub fn apply_h(&self, v: &[f64]) -> Vec<f64> {
        let mut w = self.basis.matvec_t(v);
        for (wi, h) in w.iter_mut().zip(&self.eigenvalues) {
            *wi *= h;
        }
        self.basis.matvec(&w)
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    pub fn l_max(&self) -> f64 {
        self.eigenvalues.iter().cloned().fold(f64::MIN, f64::max)
    }

    pub fn mu(&self) -> f64 {
        self.eigenvalues.iter().cloned().fold(f64::MAX, f64::min)
    }
}

/// Random orthonormal basis: QR of a seeded Gaussian matrix. Dimension one
/// degenerates to the identity.
pub(crate) fn random_basis(dim: usize, rng: &mut RunRng) -> Matrix {
    if dim == 1 {
        return Matrix::identity(1);
    }
    let mut g = Matrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            g[(i, j)] = rng::normal(rng);
        }
    }
    g.qr_q()
}

/// Seeded direction scaled to the requested norm.
pub(crate) fn random_optimum(dim: usize, norm: f64, rng: &mut RunRng) -> Vec<f64> {
    let mut v = rng::normal_vec(rng, dim);
    let n = linalg::norm(&v);
    if n == 0.0 {
        v[0] = 1.0;
        return random_optimum_rescale(v, norm);
    }
    for vi in v.iter_mut() {
        *vi *= norm / n;
    }
    v
}

fn random_optimum_rescale(mut v: Vec<f64>, norm: f64) -> Vec<f64> {
    let n = linalg::norm(&v);
    for vi in v.iter_mut() {
        *vi *= norm / n;
    }
    v
}

/// Basis for the given spectrum: isotropic spectra keep the identity basis
/// (every orthonormal basis gives the same H, and H·v stays exact).
pub(crate) fn basis_for(eigenvalues: &[f64], rng: &mut RunRng) -> Matrix {
    let isotropic = eigenvalues.windows(2).all(|w| w[0] == w[1]);
    if isotropic {
        Matrix::identity(eigenvalues.len())
    } else {
        random_basis(eigenvalues.len(), rng)
    }
}

pub(crate) fn build_least_squares(spec: &ProblemSpec, rng: &mut RunRng) -> Result<Problem> {
    let eigenvalues = spec.eigen_decay.eigenvalues(spec.dim)?;
    let basis = basis_for(&eigenvalues, rng);
    let theta_star = random_optimum(spec.dim, spec.optimum_norm, rng);
    // Noise covariance at the optimum: E[xxᵀε²] = σ²H.
    let mut c_eigen = Matrix::zeros(spec.dim, spec.dim);
    for (i, &h) in eigenvalues.iter().enumerate() {
        c_eigen[(i, i)] = spec.noise_variance * h;
    }
    let noise_cov = basis.matmul(&c_eigen).matmul(&basis.transpose());
    let model = QuadraticModel::new(
        eigenvalues.clone(),
        basis.clone(),
        &noise_cov,
        theta_star.clone(),
    )?;
    let design = GaussianDesign::new(eigenvalues, basis);
    let constants = Constants {
        mu: Some(design.mu()),
        l: Some(design.l_max()),
        sigma_sq: Some(spec.noise_variance * design.trace()),
        r_sq: Some(design.trace()),
        grad_bound: None,
        uc_tau: None,
    };
    Ok(Problem::assemble(
        spec.clone(),
        OracleImpl::LeastSquares {
            design,
            noise_std: spec.noise_variance.sqrt(),
            model,
        },
        Some(theta_star),
        constants,
    ))
}

pub(crate) fn build_semi_stochastic(spec: &ProblemSpec, rng: &mut RunRng) -> Result<Problem> {
    let eigenvalues = spec.eigen_decay.eigenvalues(spec.dim)?;
    let basis = basis_for(&eigenvalues, rng);
    // θ* = 0 and C = σ²I for spec-built semi-stochastic quadratics;
    // Problem::from_quadratic accepts arbitrary C and θ*.
    let noise_cov = Matrix::scaled_identity(spec.dim, spec.noise_variance);
    let model = QuadraticModel::new(eigenvalues, basis, &noise_cov, vec![0.0; spec.dim])?;
    Ok(problem_from_model(spec.clone(), model))
}

pub(crate) fn problem_from_model(spec: ProblemSpec, model: QuadraticModel) -> Problem {
    let constants = Constants {
        mu: Some(model.mu()),
        l: Some(model.l_max()),
        sigma_sq: Some(model.noise_cov_eigen().trace()),
        r_sq: Some(model.eigenvalues().iter().sum()),
        grad_bound: None,
        uc_tau: None,
    };
    let optimum = model.theta_star().to_vec();
    Problem::assemble(
        spec,
        OracleImpl::SemiStochastic { model },
        Some(optimum),
        constants,
    )
}

pub(crate) fn build_logistic(spec: &ProblemSpec, rng: &mut RunRng) -> Result<Problem> {
    let eigenvalues = spec.eigen_decay.eigenvalues(spec.dim)?;
    let basis = basis_for(&eigenvalues, rng);
    let theta_star = random_optimum(spec.dim, spec.optimum_norm, rng);
    let design = GaussianDesign::new(eigenvalues, basis);
    let math = LogisticMath::new(&design, theta_star.clone());
    let constants = Constants {
        mu: None,
        // Per-sample Hessian of the logistic loss is σ'(·)xxᵀ ⪯ ¼xxᵀ.
        l: Some(design.l_max() / 4.0),
        sigma_sq: Some(design.trace() / 4.0),
        r_sq: Some(design.trace()),
        grad_bound: None,
        uc_tau: None,
    };
    // The generative θ* is the population risk minimizer (well-specified
    // model), so the optimum is exact.
    Ok(Problem::assemble(
        spec.clone(),
        OracleImpl::Logistic { design, math },
        Some(theta_star),
        constants,
    ))
}

pub(crate) fn uc_gradient(theta: &[f64], rho: f64) -> Vec<f64> {
    let norm = linalg::norm(theta);
    if norm == 0.0 {
        return vec![0.0; theta.len()];
    }
    let scale = norm.powf(rho - 2.0);
    theta.iter().map(|t| scale * t).collect()
}

pub(crate) fn build_uc_norm(spec: &ProblemSpec, projection: &Option<Ball>) -> Result<Problem> {
    let rho = spec.uc_exponent.expect("validated");
    let tau = 1.0 - 2.0 / rho;
    let radius = projection.as_ref().map(|b| b.radius);
    // Constants are taken on the projection ball when one is supplied.
    let (l, grad_bound) = match radius {
        Some(r) => {
            let g_sq = r.powf(2.0 * (rho - 1.0)) + spec.noise_variance * spec.dim as f64;
            (Some((rho - 1.0) * r.powf(rho - 2.0)), Some(g_sq.sqrt()))
        }
        None => (None, None),
    };
    let constants = Constants {
        mu: None,
        l,
        sigma_sq: Some(spec.noise_variance * spec.dim as f64),
        r_sq: None,
        grad_bound,
        uc_tau: Some(tau),
    };
    Ok(Problem::assemble(
        spec.clone(),
        OracleImpl::UcNorm {
            rho,
            noise_std: spec.noise_variance.sqrt(),
        },
        Some(vec![0.0; spec.dim]),
        constants,
    ))
}

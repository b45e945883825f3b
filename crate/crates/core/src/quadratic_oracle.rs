//! Closed-form moments of constant-step SGD on quadratics with additive noise.
//!
//! For f(θ) = ½(θ−θ*)ᵀH(θ−θ*) and gradient noise ξ ~ (0, C) i.i.d., the
//! recursion η_{n} = (I−γH)η_{n−1} + γξ_n has exactly computable second
//! moments. These formulas are the ground truth that the Monte Carlo engine
//! is validated against.
//!
//! All operators are evaluated in H's eigenbasis: the noise covariance is
//! rotated once at construction and every evaluation is then O(d²) with
//! per-eigenvalue scalar powers (no dense matrix powers anywhere).

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::rng::{self, RunRng};

/// Quadratic model stored spectrally: H = U·diag(h)·Uᵀ, plus the noise
/// covariance expressed in the eigenbasis and the optimum θ*.
#[derive(Debug, Clone)]
pub struct QuadraticModel {
    eigenvalues: Vec<f64>,
    basis: Matrix,
    noise_cov_eigen: Matrix,
    noise_chol_eigen: Option<Matrix>,
    theta_star: Vec<f64>,
}

/// Iteration count for a closed-form evaluation. The stationary limit is an
/// explicit variant rather than a sentinel integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    Finite(u64),
    Stationary,
}

/// `Var(χ_n)` and, for Gaussian noise, `Var(χ_n²)` of the pure-noise part of
/// the consecutive-gradient statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiMoments {
    pub variance: f64,
    pub variance_of_square: Option<f64>,
}

impl QuadraticModel {
    /// Build a model from an eigen-decomposition of H, a noise covariance in
    /// the *original* coordinates, and the optimum.
    pub fn new(
        eigenvalues: Vec<f64>,
        basis: Matrix,
        noise_cov: &Matrix,
        theta_star: Vec<f64>,
    ) -> Result<Self> {
        let d = eigenvalues.len();
        if d == 0 {
            return Err(Error::invalid_spec("dim", "dimension must be at least 1"));
        }
        if eigenvalues.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::invalid_spec(
                "eigenvalues",
                "all eigenvalues of H must be strictly positive",
            ));
        }
        if basis.rows() != d || basis.cols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: basis.rows(),
            });
        }
        if basis.orthonormality_defect() > 1e-10 {
            return Err(Error::invalid_spec("basis", "basis is not orthonormal to 1e-10"));
        }
        if noise_cov.rows() != d || !noise_cov.is_symmetric(1e-10) {
            return Err(Error::invalid_spec(
                "noise_covariance",
                "noise covariance must be a symmetric d×d matrix",
            ));
        }
        linalg::check_dim(d, &theta_star)?;
        // Rotate C once: C̃ = Uᵀ C U.
        let noise_cov_eigen = basis.transpose().matmul(noise_cov).matmul(&basis);
        // PSD check doubles as the sampling factor.
        let chol = noise_cov_eigen.cholesky_psd(1e-10)?;
        let degenerate = noise_cov_eigen.frobenius_sq() == 0.0;
        Ok(QuadraticModel {
            eigenvalues,
            basis,
            noise_cov_eigen,
            noise_chol_eigen: if degenerate { None } else { Some(chol) },
            theta_star,
        })
    }

    /// Model with a diagonal H (identity eigenbasis).
    pub fn from_diagonal(diag: &[f64], noise_cov: &Matrix, theta_star: Vec<f64>) -> Result<Self> {
        QuadraticModel::new(
            diag.to_vec(),
            Matrix::identity(diag.len()),
            noise_cov,
            theta_star,
        )
    }

    /// Random verification model: log-uniform spectrum in [0.1, 1], a random
    /// orthonormal basis, a random PSD noise covariance, and a random optimum.
    pub fn random(dim: usize, rng: &mut RunRng) -> Self {
        use rand::Rng;
        let eigenvalues: Vec<f64> = (0..dim)
            .map(|_| 0.1f64 * (10.0f64).powf(rng.random::<f64>()))
            .collect();
        let mut g = Matrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                g[(i, j)] = rng::normal(rng);
            }
        }
        let basis = g.qr_q();
        // C = A·Aᵀ/d is PSD with O(1) entries.
        let mut a = Matrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                a[(i, j)] = rng::normal(rng);
            }
        }
        let mut c = a.matmul(&a.transpose());
        for i in 0..dim {
            for j in 0..dim {
                c[(i, j)] /= dim as f64;
            }
        }
        let theta_star = rng::normal_vec(rng, dim);
        QuadraticModel::new(eigenvalues, basis, &c, theta_star).expect("random model is valid")
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn theta_star(&self) -> &[f64] {
        &self.theta_star
    }

    /// Noise covariance rotated into the eigenbasis.
    pub fn noise_cov_eigen(&self) -> &Matrix {
        &self.noise_cov_eigen
    }

    /// Noise covariance in the original coordinates (rotated back).
    pub fn noise_cov(&self) -> Matrix {
        self.basis
            .matmul(&self.noise_cov_eigen)
            .matmul(&self.basis.transpose())
    }

    /// Hessian in the original coordinates.
    pub fn hessian(&self) -> Matrix {
        let d = self.dim();
        let mut hu = self.basis.clone();
        for i in 0..d {
            for j in 0..d {
                hu[(i, j)] *= self.eigenvalues[j];
            }
        }
        hu.matmul(&self.basis.transpose())
    }

    pub fn l_max(&self) -> f64 {
        self.eigenvalues.iter().cloned().fold(f64::MIN, f64::max)
    }

    pub fn mu(&self) -> f64 {
        self.eigenvalues.iter().cloned().fold(f64::MAX, f64::min)
    }

    /// Rotate a vector of original coordinates into the eigenbasis.
    pub fn to_eigen(&self, v: &[f64]) -> Vec<f64> {
        self.basis.matvec_t(v)
    }

    /// Rotate a vector of eigen coordinates back to the original basis.
    pub fn from_eigen(&self, v: &[f64]) -> Vec<f64> {
        self.basis.matvec(v)
    }

    /// H·v in original coordinates.
    pub fn apply_hessian(&self, v: &[f64]) -> Vec<f64> {
        let mut w = self.to_eigen(v);
        for (wi, h) in w.iter_mut().zip(&self.eigenvalues) {
            *wi *= h;
        }
        self.from_eigen(&w)
    }

    /// One noise draw ξ ~ N(0, C), in eigen coordinates.
    pub fn sample_noise_eigen(&self, rng: &mut RunRng) -> Vec<f64> {
        match &self.noise_chol_eigen {
            None => vec![0.0; self.dim()],
            Some(l) => {
                let z = rng::normal_vec(rng, self.dim());
                l.matvec(&z)
            }
        }
    }

    fn require_gamma_below(&self, gamma: f64, bound: f64, what: &str) -> Result<()> {
        if !(gamma > 0.0) || gamma >= bound {
            return Err(Error::InvalidParameter(format!(
                "step size {gamma} outside the validity domain (0, {what}) of this formula"
            )));
        }
        Ok(())
    }
}

/// Scalar power by binary exponentiation; exact for any iteration count
/// (f64::powi takes i32 exponents).
fn pow_n(base: f64, mut n: u64) -> f64 {
    let mut acc = 1.0;
    let mut b = base;
    while n > 0 {
        if n & 1 == 1 {
            acc *= b;
        }
        b *= b;
        n >>= 1;
    }
    acc
}

/// E‖θ_n − θ₀‖² for the chain started at θ₀ = θ* + η₀, valid for γ ∈ (0, 1/L):
/// η₀ᵀ[I−(I−γH)ⁿ]²η₀ + γ·tr{[I−(I−γH)^{2n}](2I−γH)⁻¹H⁻¹C}.
pub fn expected_omega_sq(model: &QuadraticModel, gamma: f64, eta0: &[f64], n: u64) -> Result<f64> {
    model.require_gamma_below(gamma, 1.0 / model.l_max(), "1/L")?;
    linalg::check_dim(model.dim(), eta0)?;
    if n == 0 {
        return Ok(0.0);
    }
    let e = model.to_eigen(eta0);
    let mut bias = 0.0;
    let mut noise = 0.0;
    for (i, &h) in model.eigenvalues.iter().enumerate() {
        let an = pow_n(1.0 - gamma * h, n);
        bias += e[i] * e[i] * (1.0 - an) * (1.0 - an);
        noise += model.noise_cov_eigen[(i, i)] * (1.0 - an * an) / ((2.0 - gamma * h) * h);
    }
    Ok(bias + gamma * noise)
}

/// n → ∞ limit of [`expected_omega_sq`]: ‖η₀‖² + γ·tr{H⁻¹C(2I−γH)⁻¹}.
pub fn stationary_omega_sq(model: &QuadraticModel, gamma: f64, eta0: &[f64]) -> Result<f64> {
    model.require_gamma_below(gamma, 1.0 / model.l_max(), "1/L")?;
    linalg::check_dim(model.dim(), eta0)?;
    let mut noise = 0.0;
    for (i, &h) in model.eigenvalues.iter().enumerate() {
        noise += model.noise_cov_eigen[(i, i)] / (h * (2.0 - gamma * h));
    }
    Ok(linalg::norm_sq(eta0) + gamma * noise)
}

/// Leading-order small-n expansion γ²η₀ᵀH²η₀·n² + γ²tr(C)·n.
/// Only meaningful while nγL ≪ 1; the caller owns that requirement.
pub fn transient_omega_expansion(model: &QuadraticModel, gamma: f64, eta0: &[f64], n: u64) -> Result<f64> {
    linalg::check_dim(model.dim(), eta0)?;
    let e = model.to_eigen(eta0);
    let h2: f64 = model
        .eigenvalues
        .iter()
        .zip(&e)
        .map(|(h, ei)| h * h * ei * ei)
        .sum();
    let tr_c = model.noise_cov_eigen.trace();
    let nf = n as f64;
    Ok(gamma * gamma * (h2 * nf * nf + tr_c * nf))
}

/// E⟨η_n, P(H)η_n⟩ for a polynomial P (coefficients low-order first), valid
/// for γ ∈ (0, 1/2L]:
/// η₀ᵀP(H)(I−γH)^{2n}η₀ + γ·tr{P(H)C[I−(I−γH)^{2n}]H⁻¹(2I−γH)⁻¹}.
pub fn expected_quadratic_form(
    model: &QuadraticModel,
    gamma: f64,
    eta0: &[f64],
    n: Horizon,
    poly: &[f64],
) -> Result<f64> {
    let bound = 1.0 / (2.0 * model.l_max());
    if !(gamma > 0.0) || gamma > bound {
        return Err(Error::InvalidParameter(format!(
            "step size {gamma} outside the validity domain (0, 1/2L] of this formula"
        )));
    }
    linalg::check_dim(model.dim(), eta0)?;
    let eval_poly = |h: f64| poly.iter().rev().fold(0.0, |acc, &c| acc * h + c);
    let e = model.to_eigen(eta0);
    let mut total = 0.0;
    for (i, &h) in model.eigenvalues.iter().enumerate() {
        let p = eval_poly(h);
        let a2n = match n {
            Horizon::Finite(k) => pow_n(1.0 - gamma * h, 2 * k),
            Horizon::Stationary => 0.0,
        };
        total += e[i] * e[i] * p * a2n;
        total += gamma * p * model.noise_cov_eigen[(i, i)] * (1.0 - a2n) / (h * (2.0 - gamma * h));
    }
    Ok(total)
}

/// Leading-order stationary expectation of the inner product of two
/// consecutive stochastic gradients: −½·γ·tr(f''(θ*)·C(θ*)).
pub fn stationary_pflug_expectation(hessian: &Matrix, noise_cov: &Matrix, gamma: f64) -> f64 {
    assert_eq!(hessian.rows(), noise_cov.rows());
    let d = hessian.rows();
    let mut tr = 0.0;
    for i in 0..d {
        for j in 0..d {
            tr += hessian[(i, j)] * noise_cov[(j, i)];
        }
    }
    -0.5 * gamma * tr
}

/// Exact stationary expectation of the same inner product for the additive
/// noise quadratic chain: −γ·tr{HC(2I−γH)⁻¹}. Differs from the leading-order
/// value by O(γ²); useful for checking that the remainder shrinks with γ.
pub fn stationary_pflug_exact(model: &QuadraticModel, gamma: f64) -> Result<f64> {
    model.require_gamma_below(gamma, 1.0 / model.l_max(), "1/L")?;
    let mut tr = 0.0;
    for (i, &h) in model.eigenvalues.iter().enumerate() {
        tr += h * model.noise_cov_eigen[(i, i)] / (2.0 - gamma * h);
    }
    Ok(-gamma * tr)
}

/// Moments of χ_n = (1/n)Σ ξ_{k+1}ᵀξ_{k+2}: variance tr(C²)/n always, and
/// for Gaussian ξ the closed-form variance of χ_n².
///
/// The consecutive products overlap in one noise vector, so the fourth
/// moment picks up both the 3 two-pair pairings of an i.i.d. sum and an
/// adjacent-pair covariance term E[(ξ₁ᵀξ₂)²(ξ₂ᵀξ₃)²] − tr²(C²) = 2tr(C⁴):
///
///   Var(χ_n²) = 2tr²(C²)/n² + 6tr(C⁴)/n³ + 12(n−1)tr(C⁴)/n⁴,
///
/// using E(ξ₁ᵀξ₂)⁴ = 3[tr²(C²) + 2tr(C⁴)]. At n = 1 this reduces to
/// E(ξ₁ᵀξ₂)⁴ − tr²(C²); for large n it approaches the CLT value
/// 2·Var(χ_n)². Monte Carlo agrees with this expression (see the module
/// tests), not with the 1/n³ scaling sometimes quoted for it.
pub fn chi_moments(noise_cov: &Matrix, n: u64, gaussian: bool) -> ChiMoments {
    assert!(n >= 1);
    let c2 = noise_cov.matmul(noise_cov);
    let tr_c2 = c2.trace();
    let tr_c4 = c2.frobenius_sq();
    let nf = n as f64;
    let variance = tr_c2 / nf;
    let variance_of_square = gaussian.then(|| {
        2.0 * tr_c2 * tr_c2 / (nf * nf)
            + 6.0 * tr_c4 / (nf * nf * nf)
            + 12.0 * (nf - 1.0) * tr_c4 / (nf * nf * nf * nf)
    });
    ChiMoments {
        variance,
        variance_of_square,
    }
}

/// Simulate the chain in eigen coordinates and return ‖Ω_n‖² = ‖θ_n−θ₀‖² and
/// ⟨η_n, P(H)η_n⟩ at the requested iterations. Used by the verification path.
pub fn simulate_chain_statistics(
    model: &QuadraticModel,
    gamma: f64,
    eta0: &[f64],
    checkpoints: &[u64],
    poly: &[f64],
    rng: &mut RunRng,
) -> (Vec<f64>, Vec<f64>) {
    debug_assert!(
        checkpoints.windows(2).all(|w| w[0] <= w[1]),
        "checkpoints must be non-decreasing"
    );
    let e0 = model.to_eigen(eta0);
    let mut eta = e0.clone();
    let eval_poly = |h: f64| poly.iter().rev().fold(0.0, |acc, &c| acc * h + c);
    let p: Vec<f64> = model.eigenvalues.iter().map(|&h| eval_poly(h)).collect();
    let mut omegas = Vec::with_capacity(checkpoints.len());
    let mut forms = Vec::with_capacity(checkpoints.len());
    let mut next = 0usize;
    let n_max = checkpoints.iter().copied().max().unwrap_or(0);
    for n in 1..=n_max {
        let xi = model.sample_noise_eigen(rng);
        for i in 0..eta.len() {
            eta[i] = (1.0 - gamma * model.eigenvalues[i]) * eta[i] + gamma * xi[i];
        }
        while next < checkpoints.len() && checkpoints[next] == n {
            let omega: f64 = eta
                .iter()
                .zip(&e0)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let form: f64 = eta.iter().zip(&p).map(|(a, pi)| pi * a * a).sum();
            omegas.push(omega);
            forms.push(form);
            next += 1;
        }
    }
    (omegas, forms)
}

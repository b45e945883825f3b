//! Exact population quantities for synthetic logistic regression.
//!
//! With x ~ N(0, H) and y | x following the logistic model at θ*, the risk
//! f(θ) = E log(1 + e^{−y⟨x,θ⟩}) depends on x only through the bivariate
//! Gaussian (⟨x,θ⟩, ⟨x,θ*⟩), so it reduces to a two-dimensional Gaussian
//! integral evaluated with Gauss–Hermite quadrature.

use super::synthetic::GaussianDesign;
use crate::quadrature::{sigmoid, softplus, GaussHermite};
use crate::rng::RunRng;
use rand::Rng;

const GH_NODES: usize = 96;

#[derive(Debug, Clone)]
pub(crate) struct LogisticMath {
    theta_star: Vec<f64>,
    h_theta_star: Vec<f64>,
    /// b = θ*ᵀHθ*.
    b: f64,
    gh: GaussHermite,
    design: GaussianDesign,
}

impl LogisticMath {
    pub fn new(design: &GaussianDesign, theta_star: Vec<f64>) -> Self {
        let h_theta_star = design.apply_h(&theta_star);
        let b = crate::linalg::dot(&theta_star, &h_theta_star);
        LogisticMath {
            theta_star,
            h_theta_star,
            b,
            gh: GaussHermite::new(GH_NODES),
            design: design.clone(),
        }
    }

    /// Draw y ∈ {−1, +1} with P(y = 1 | x) = σ(⟨x, θ*⟩).
    pub fn sample_label(&self, x: &[f64], rng: &mut RunRng) -> f64 {
        let v = crate::linalg::dot(x, &self.theta_star);
        if rng.random::<f64>() < sigmoid(v) {
            1.0
        } else {
            -1.0
        }
    }

    /// Population risk: E[σ(v)·softplus(−u) + σ(−v)·softplus(u)] over the
    /// Gaussian pair (u, v) = (⟨x,θ⟩, ⟨x,θ*⟩).
    pub fn objective(&self, theta: &[f64]) -> f64 {
        let h_theta = self.design.apply_h(theta);
        let a = crate::linalg::dot(theta, &h_theta);
        let c = crate::linalg::dot(theta, &self.h_theta_star);
        self.gh.expect_bivariate(a, self.b, c, |u, v| {
            sigmoid(v) * softplus(-u) + sigmoid(-v) * softplus(u)
        })
    }

    /// Population gradient ∇f(θ) = E[(σ(u) − σ(v))·x]. By Gaussian
    /// conditioning E[x·g(u,v)] = [Hθ, Hθ*]·Σ⁻¹·E[(u,v)ᵀ g(u,v)].
    pub fn full_gradient(&self, theta: &[f64]) -> Vec<f64> {
        let h_theta = self.design.apply_h(theta);
        let a = crate::linalg::dot(theta, &h_theta);
        let c = crate::linalg::dot(theta, &self.h_theta_star);
        let b = self.b;
        let g = |u: f64, v: f64| sigmoid(u) - sigmoid(v);
        let m_u = self.gh.expect_bivariate(a, b, c, |u, v| u * g(u, v));
        let m_v = self.gh.expect_bivariate(a, b, c, |u, v| v * g(u, v));
        // Solve Σ·(α, β)ᵀ = (m_u, m_v)ᵀ with a tiny ridge for degenerate Σ.
        let ridge = 1e-12 * a.max(b).max(1.0);
        let det = (a + ridge) * (b + ridge) - c * c;
        let alpha = ((b + ridge) * m_u - c * m_v) / det;
        let beta = ((a + ridge) * m_v - c * m_u) / det;
        h_theta
            .iter()
            .zip(&self.h_theta_star)
            .map(|(ht, hs)| alpha * ht + beta * hs)
            .collect()
    }
}

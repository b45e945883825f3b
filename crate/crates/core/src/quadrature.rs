//! Gauss–Hermite quadrature for Gaussian expectations.
//!
//! The synthetic logistic objective is an expectation over a bivariate
//! Gaussian, so it can be evaluated to near machine precision with a tensor
//! Gauss–Hermite rule instead of an empirical sample.

/// Physicists' Gauss–Hermite rule: ∫ g(x)·e^{−x²} dx ≈ Σ wᵢ·g(xᵢ).
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Nodes and weights by Newton iteration on the orthonormal Hermite
    /// recurrence (the classical `gauher` scheme).
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        let nf = n as f64;
        let mut z = 0.0f64;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..200 {
                // Orthonormal Hermite functions: p1 = H̃_n(z).
                let mut p1 = std::f64::consts::PI.powf(-0.25);
                let mut p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let dz = p1 / pp;
                z -= dz;
                if dz.abs() < 1e-15 {
                    break;
                }
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (pp * pp);
            weights[n - 1 - i] = weights[i];
        }
        GaussHermite { nodes, weights }
    }

    /// E[g(Z)] for Z ~ N(0, 1).
    pub fn expect(&self, g: impl Fn(f64) -> f64) -> f64 {
        let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
        let sqrt2 = std::f64::consts::SQRT_2;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * g(sqrt2 * x))
            .sum::<f64>()
            * inv_sqrt_pi
    }

    /// E[g(U, V)] for (U, V) centered Gaussian with covariance
    /// [[a, c], [c, b]]. Degenerate covariances collapse to the supported
    /// subspace (clamped Cholesky).
    pub fn expect_bivariate(&self, a: f64, b: f64, c: f64, g: impl Fn(f64, f64) -> f64) -> f64 {
        let l11 = a.max(0.0).sqrt();
        let l21 = if l11 > 0.0 { c / l11 } else { 0.0 };
        let l22 = (b - l21 * l21).max(0.0).sqrt();
        let inv_pi = 1.0 / std::f64::consts::PI;
        let sqrt2 = std::f64::consts::SQRT_2;
        if l22 == 0.0 {
            // Rank ≤ 1: single quadrature axis.
            return self.expect(|z| g(l11 * z, l21 * z));
        }
        let mut total = 0.0;
        for (&x1, &w1) in self.nodes.iter().zip(&self.weights) {
            let z1 = sqrt2 * x1;
            let u = l11 * z1;
            let base_v = l21 * z1;
            let mut inner = 0.0;
            for (&x2, &w2) in self.nodes.iter().zip(&self.weights) {
                let z2 = sqrt2 * x2;
                inner += w2 * g(u, base_v + l22 * z2);
            }
            total += w1 * inner;
        }
        total * inv_pi
    }
}

/// Numerically stable log(1 + eˣ).
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Logistic sigmoid.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_moments_are_exact() {
        let gh = GaussHermite::new(40);
        assert!((gh.expect(|_| 1.0) - 1.0).abs() < 1e-13);
        assert!(gh.expect(|z| z).abs() < 1e-13);
        assert!((gh.expect(|z| z * z) - 1.0).abs() < 1e-12);
        assert!((gh.expect(|z| z.powi(4)) - 3.0).abs() < 1e-11);
    }

    #[test]
    fn bivariate_covariance_recovered() {
        let gh = GaussHermite::new(40);
        let (a, b, c) = (2.0, 1.5, -0.7);
        assert!((gh.expect_bivariate(a, b, c, |u, _| u * u) - a).abs() < 1e-11);
        assert!((gh.expect_bivariate(a, b, c, |_, v| v * v) - b).abs() < 1e-11);
        assert!((gh.expect_bivariate(a, b, c, |u, v| u * v) - c).abs() < 1e-11);
        // Degenerate: u = v.
        assert!((gh.expect_bivariate(1.0, 1.0, 1.0, |u, v| (u - v).abs())).abs() < 1e-12);
    }

    #[test]
    fn softplus_matches_naive_in_safe_range() {
        for x in [-30.0, -1.0, 0.0, 0.5, 20.0] {
            let naive: f64 = (1.0f64 + f64::exp(x)).ln();
            assert!((softplus(x) - naive).abs() < 1e-12);
        }
        assert!(softplus(800.0).is_finite());
    }
}

//! Small dense linear algebra helpers.
//!
//! Everything in this crate works on problems of modest dimension (d ≤ a few
//! hundred), so a plain row-major matrix over `Vec<f64>` is simpler and easier
//! to audit than pulling in a full linear algebra stack.

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn check_dim(expected: usize, v: &[f64]) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: v.len(),
        });
    }
    Ok(())
}

/// Dense row-major square or rectangular matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = if r > 0 { rows[0].len() } else { 0 };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Matrix::zeros(n, n);
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn scaled_identity(n: usize, scale: f64) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = scale;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `self * v`
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `selfᵀ * v`
    pub fn matvec_t(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, vi) in v.iter().enumerate() {
            axpy(*vi, self.row(i), &mut out);
        }
        out
    }

    /// `self * other`
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self[(i, j)] - self[(j, i)]).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Largest deviation of `selfᵀ·self` from the identity; zero means the
    /// columns form an orthonormal basis.
    pub fn orthonormality_defect(&self) -> f64 {
        let gram = self.transpose().matmul(self);
        let mut worst: f64 = 0.0;
        for i in 0..gram.rows {
            for j in 0..gram.cols {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - target).abs());
            }
        }
        worst
    }

    /// Lower-triangular Cholesky factor of a symmetric PSD matrix.
    ///
    /// Tiny negative pivots (within `tol` of zero) are clamped so that
    /// positive semi-definite inputs with rounding noise still factor;
    /// anything more negative is rejected.
    pub fn cholesky_psd(&self, tol: f64) -> Result<Matrix> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut l = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                if i == j {
                    if s < -tol {
                        return Err(Error::InvalidParameter(format!(
                            "matrix is not positive semi-definite (pivot {s:.3e} at {i})"
                        )));
                    }
                    l[(i, i)] = s.max(0.0).sqrt();
                } else {
                    l[(i, j)] = if l[(j, j)] > 0.0 { s / l[(j, j)] } else { 0.0 };
                }
            }
        }
        Ok(l)
    }

    /// Orthonormal basis via Householder QR of this matrix (columns of Q).
    pub fn qr_q(&self) -> Matrix {
        assert_eq!(self.rows, self.cols, "qr_q expects a square matrix");
        let n = self.rows;
        let mut r = self.clone();
        let mut q = Matrix::identity(n);
        for k in 0..n {
            // Householder vector for column k below the diagonal.
            let mut v: Vec<f64> = (k..n).map(|i| r[(i, k)]).collect();
            let alpha = -v[0].signum() * norm(&v);
            if alpha == 0.0 {
                continue;
            }
            v[0] -= alpha;
            let vnorm_sq = norm_sq(&v);
            if vnorm_sq == 0.0 {
                continue;
            }
            // Apply H = I - 2vvᵀ/‖v‖² to R (left) and accumulate into Q.
            for j in k..n {
                let mut s = 0.0;
                for i in k..n {
                    s += v[i - k] * r[(i, j)];
                }
                let f = 2.0 * s / vnorm_sq;
                for i in k..n {
                    r[(i, j)] -= f * v[i - k];
                }
            }
            for j in 0..n {
                let mut s = 0.0;
                for i in k..n {
                    s += v[i - k] * q[(i, j)];
                }
                let f = 2.0 * s / vnorm_sq;
                for i in k..n {
                    q[(i, j)] -= f * v[i - k];
                }
            }
        }
        // Q accumulated as the product of reflectors applied to I, i.e. Qᵀ.
        q.transpose()
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Ordinary least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        sxy += (xi - mx) * (yi - my);
        sxx += (xi - mx) * (xi - mx);
    }
    sxy / sxx
}

/// Sample mean and standard error of a slice.
pub fn mean_se(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
    (mean, Some((var / n as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;
    use rand_distr::StandardNormal;
    use rand::Rng;

    #[test]
    fn qr_produces_orthonormal_basis() {
        let mut rng = seeded_rng(7);
        for d in [1usize, 2, 5, 20] {
            let mut g = Matrix::zeros(d, d);
            for i in 0..d {
                for j in 0..d {
                    g[(i, j)] = rng.sample::<f64, _>(StandardNormal);
                }
            }
            let q = g.qr_q();
            assert!(q.orthonormality_defect() < 1e-12, "d={d}");
        }
    }

    #[test]
    fn cholesky_reconstructs() {
        let c = Matrix::from_rows(&[&[4.0, 2.0], &[2.0, 3.0]]);
        let l = c.cholesky_psd(1e-12).unwrap();
        let back = l.matmul(&l.transpose());
        for i in 0..2 {
            for j in 0..2 {
                assert!((back[(i, j)] - c[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let c = Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(c.cholesky_psd(1e-12).is_err());
    }

    #[test]
    fn slope_of_line_is_exact() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 1.0).collect();
        assert!((ls_slope(&x, &y) - 3.0).abs() < 1e-12);
    }
}

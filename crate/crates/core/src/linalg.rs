//! Dense linear algebra aliases and the few covariance helpers every filter
//! needs.

use nalgebra::linalg::Cholesky;
use nalgebra::{DMatrix, DVector, Dyn};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Relative tolerance used to decide that a covariance is symmetric.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Eigenvalues above this (negative) floor are treated as rounding noise.
pub const EIGEN_FLOOR: f64 = -1e-10;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

pub fn is_symmetric(m: &Matrix) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return false;
            }
        }
    }
    true
}

/// Symmetrizes `m` and clamps small negative eigenvalues to zero.
///
/// The eigen decomposition only runs when a jittered Cholesky fails, so the
/// common well-conditioned case costs one factorization.
pub fn condition_covariance(m: Matrix) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::InvalidCovariance);
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidCovariance);
    }
    let sym = (&m + m.transpose()) * 0.5;
    let n = sym.nrows();
    if n == 0 {
        return Ok(sym);
    }
    let scale = sym.diagonal().iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let jitter = 1e-10 * scale.max(f64::MIN_POSITIVE);
    let shifted = &sym + Matrix::identity(n, n) * jitter;
    if Cholesky::new(shifted).is_some() {
        return Ok(sym);
    }
    let eig = sym.clone().symmetric_eigen();
    let floor = EIGEN_FLOOR * scale.max(1.0);
    if eig.eigenvalues.iter().any(|l| *l < floor) {
        return Err(Error::InvalidCovariance);
    }
    let clamped = eig.eigenvalues.map(|l| l.max(0.0));
    let v = &eig.eigenvectors;
    let out = v * Matrix::from_diagonal(&clamped) * v.transpose();
    Ok((&out + out.transpose()) * 0.5)
}

/// A factor `A` with `A Aᵀ = m` for a PSD `m`. Lower Cholesky when `m` is
/// positive definite, otherwise a scaled eigenbasis.
pub fn psd_factor(m: &Matrix) -> Matrix {
    let n = m.nrows();
    if n == 0 {
        return Matrix::zeros(0, 0);
    }
    if let Some(ch) = Cholesky::new(m.clone()) {
        return ch.l();
    }
    let eig = m.clone().symmetric_eigen();
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    eig.eigenvectors * Matrix::from_diagonal(&roots)
}

/// Cached factorization of a positive-definite covariance, used wherever a
/// Gaussian log density or a solve against the covariance is needed.
#[derive(Debug, Clone)]
pub struct CovFactor {
    chol: Cholesky<f64, Dyn>,
    lower: Matrix,
    log_det: f64,
}

impl CovFactor {
    /// Returns `None` when `m` is not positive definite.
    pub fn new(m: &Matrix) -> Option<Self> {
        let chol = Cholesky::new(m.clone())?;
        let lower = chol.l();
        let log_det = 2.0 * lower.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        if !log_det.is_finite() {
            return None;
        }
        Some(Self {
            chol,
            lower,
            log_det,
        })
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn lower(&self) -> &Matrix {
        &self.lower
    }

    /// `m⁻¹ b`.
    pub fn solve(&self, b: &Matrix) -> Matrix {
        self.chol.solve(b)
    }

    pub fn solve_vec(&self, b: &Vector) -> Vector {
        self.chol.solve(b)
    }

    /// `rᵀ m⁻¹ r`.
    pub fn mahalanobis_sq(&self, r: &Vector) -> f64 {
        let z = self
            .lower
            .solve_lower_triangular(r)
            .expect("cholesky factor has a positive diagonal");
        z.norm_squared()
    }

    /// `log N(r; 0, m)`.
    pub fn log_density_residual(&self, r: &Vector) -> f64 {
        -0.5 * (self.dim() as f64 * LN_2PI + self.log_det + self.mahalanobis_sq(r))
    }
}

/// `log N(x; mean, cov)` for a positive-definite `cov`.
pub fn log_normal(x: &Vector, mean: &Vector, cov: &Matrix) -> Result<f64> {
    crate::error::check_dim("log_normal mean", x.len(), mean.len())?;
    crate::error::check_dim("log_normal covariance", x.len(), cov.nrows())?;
    let f = CovFactor::new(cov).ok_or(Error::InvalidCovariance)?;
    Ok(f.log_density_residual(&(x - mean)))
}

/// Scalar `log N(x; mean, var)`.
#[inline]
pub fn log_normal_scalar(x: f64, mean: f64, var: f64) -> f64 {
    let r = x - mean;
    -0.5 * (LN_2PI + var.ln() + r * r / var)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conditioning_clamps_rounding_noise() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0 + 1e-13, 1.0]);
        let c = condition_covariance(m).unwrap();
        assert!(is_symmetric(&c));
        let eig = c.symmetric_eigen();
        assert!(eig.eigenvalues.iter().all(|l| *l >= -1e-12));
    }

    #[test]
    fn conditioning_rejects_indefinite() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert_eq!(condition_covariance(m), Err(Error::InvalidCovariance));
    }

    #[test]
    fn factor_reproduces_singular_matrix() {
        let m = Matrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 1.0]);
        let a = psd_factor(&m);
        assert!((&a * a.transpose() - &m).abs().max() < 1e-12);
    }

    #[test]
    fn scalar_and_matrix_log_density_agree() {
        let v = log_normal(
            &Vector::from_element(1, 2.0),
            &Vector::zeros(1),
            &Matrix::from_element(1, 1, 2.0),
        )
        .unwrap();
        assert!((v - log_normal_scalar(2.0, 0.0, 2.0)).abs() < 1e-15);
        let hand = -0.5 * (4.0 * core::f64::consts::PI).ln() - 1.0;
        assert!((v - hand).abs() < 1e-14);
    }
}

use crate::error::{check_dim, Error, Result};
use crate::linalg::{condition_covariance, is_symmetric, psd_factor, CovFactor, Matrix, Vector};
use crate::rng::RngStream;

/// A Gaussian law `N(mean, cov)` with a symmetric PSD covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief {
    mean: Vector,
    cov: Matrix,
}

impl GaussianBelief {
    /// Validates symmetry, then symmetrizes and clamps rounding-level negative
    /// eigenvalues.
    pub fn new(mean: Vector, cov: Matrix) -> Result<Self> {
        check_dim("covariance rows", mean.len(), cov.nrows())?;
        check_dim("covariance cols", mean.len(), cov.ncols())?;
        if !is_symmetric(&cov) {
            return Err(Error::InvalidCovariance);
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite mean"));
        }
        let cov = condition_covariance(cov)?;
        Ok(Self { mean, cov })
    }

    pub fn scalar(mean: f64, var: f64) -> Result<Self> {
        Self::new(Vector::from_element(1, mean), Matrix::from_element(1, 1, var))
    }

    /// Accepts a covariance built by this crate's own algebra; only the
    /// conditioning step is applied.
    pub(crate) fn from_algebra(mean: Vector, cov: Matrix) -> Result<Self> {
        let cov = condition_covariance(cov)?;
        Ok(Self { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &Vector {
        &self.mean
    }

    pub fn cov(&self) -> &Matrix {
        &self.cov
    }

    pub fn into_parts(self) -> (Vector, Matrix) {
        (self.mean, self.cov)
    }

    pub fn log_density(&self, x: &Vector) -> Result<f64> {
        check_dim("point", self.dim(), x.len())?;
        let f = CovFactor::new(&self.cov).ok_or(Error::InvalidCovariance)?;
        Ok(f.log_density_residual(&(x - &self.mean)))
    }

    pub fn sampler(&self) -> GaussianSampler {
        GaussianSampler {
            mean: self.mean.clone(),
            factor: psd_factor(&self.cov),
        }
    }

    /// One draw. Factorizes the covariance on every call; use [`sampler`]
    /// for repeated draws.
    ///
    /// [`sampler`]: GaussianBelief::sampler
    pub fn sample(&self, rng: &mut RngStream) -> Vector {
        self.sampler().sample(rng)
    }
}

/// Mean plus a square-root factor of the covariance, ready for sampling.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    mean: Vector,
    factor: Matrix,
}

impl GaussianSampler {
    pub fn from_parts(mean: Vector, factor: Matrix) -> Self {
        Self { mean, factor }
    }

    pub fn sample(&self, rng: &mut RngStream) -> Vector {
        let z = rng.standard_normal_vector(self.factor.ncols());
        &self.mean + &self.factor * z
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_asymmetric() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(GaussianBelief::new(Vector::zeros(2), m).is_err());
    }

    #[test]
    fn degenerate_belief_samples_its_mean() {
        let b = GaussianBelief::new(Vector::from_element(2, 3.0), Matrix::zeros(2, 2)).unwrap();
        let mut rng = RngStream::new(0);
        assert_eq!(b.sample(&mut rng), Vector::from_element(2, 3.0));
    }

    #[test]
    fn sample_moments() {
        let cov = Matrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 1.0]);
        let b = GaussianBelief::new(Vector::from_vec(alloc::vec![1.0, -1.0]), cov.clone()).unwrap();
        let s = b.sampler();
        let mut rng = RngStream::new(11);
        let n = 100_000;
        let mut mean = Vector::zeros(2);
        let mut second = Matrix::zeros(2, 2);
        for _ in 0..n {
            let x = s.sample(&mut rng);
            mean += &x;
            second += &x * x.transpose();
        }
        mean /= n as f64;
        let c = second / n as f64 - &mean * mean.transpose();
        // 3 standard errors on each mean component.
        assert!((mean[0] - 1.0).abs() < 3.0 * (2.0 / n as f64).sqrt());
        assert!((mean[1] + 1.0).abs() < 3.0 * (1.0 / n as f64).sqrt());
        assert!((c - cov).abs().max() < 0.05);
    }
}

#[allow(unused_imports)]
use num_traits::Float;

use super::semilinear::SemiLinearGaussian;
use crate::error::{Error, Result};
use crate::gaussian::GaussianBelief;
use crate::linalg::{Matrix, Vector};

/// Scalar ARCH(1): `Xₙ = √(β₀ + β₁ Xₙ₋₁²) Uₙ`, `Yₙ = Xₙ + Vₙ`, `Vₙ ~ N(0, R)`.
#[derive(Debug, Clone)]
pub struct ArchModel {
    beta0: f64,
    beta1: f64,
    h: Matrix,
    r: Matrix,
    initial: GaussianBelief,
}

impl ArchModel {
    pub fn new(beta0: f64, beta1: f64, r: f64) -> Result<Self> {
        if !(beta0 > 0.0) {
            return Err(Error::InvalidParameter("ARCH beta0 must be positive"));
        }
        if !(beta1 >= 0.0) {
            return Err(Error::InvalidParameter("ARCH beta1 must be nonnegative"));
        }
        if !(r > 0.0) {
            return Err(Error::InvalidParameter("observation variance must be positive"));
        }
        Ok(Self {
            beta0,
            beta1,
            h: Matrix::from_element(1, 1, 1.0),
            r: Matrix::from_element(1, 1, r),
            initial: GaussianBelief::scalar(0.0, 1.0)?,
        })
    }

    pub fn with_initial(mut self, initial: GaussianBelief) -> Self {
        self.initial = initial;
        self
    }

    pub fn beta0(&self) -> f64 {
        self.beta0
    }

    pub fn beta1(&self) -> f64 {
        self.beta1
    }

    pub fn obs_var(&self) -> f64 {
        self.r[(0, 0)]
    }

    /// Conditional variance `β₀ + β₁ x²` of the next state.
    #[inline]
    pub fn state_var(&self, x_prev: f64) -> f64 {
        self.beta0 + self.beta1 * x_prev * x_prev
    }
}

impl SemiLinearGaussian for ArchModel {
    fn state_dim(&self) -> usize {
        1
    }

    fn obs_dim(&self) -> usize {
        1
    }

    fn drift(&self, _x_prev: &Vector) -> Vector {
        Vector::zeros(1)
    }

    fn noise_factor(&self, x_prev: &Vector) -> Matrix {
        Matrix::from_element(1, 1, self.state_var(x_prev[0]).sqrt())
    }

    fn obs_matrix(&self) -> &Matrix {
        &self.h
    }

    fn obs_noise(&self) -> &Matrix {
        &self.r
    }

    fn initial(&self) -> &GaussianBelief {
        &self.initial
    }
}

use alloc::borrow::Cow;

use super::semilinear::{KernelGain, SemiLinearGaussian};
use crate::error::{check_dim, Result};
use crate::gaussian::GaussianBelief;
use crate::linalg::{psd_factor, Matrix, Vector};

/// `Xₙ = F Xₙ₋₁ + Uₙ`, `Uₙ ~ N(0, Q)`; `Yₙ = H Xₙ + Vₙ`, `Vₙ ~ N(0, R)`.
#[derive(Debug, Clone)]
pub struct LinearGaussianModel {
    f: Matrix,
    q: Matrix,
    q_factor: Matrix,
    h: Matrix,
    r: Matrix,
    initial: GaussianBelief,
    gain: KernelGain,
}

impl LinearGaussianModel {
    pub fn new(f: Matrix, q: Matrix, h: Matrix, r: Matrix, initial: GaussianBelief) -> Result<Self> {
        let p = f.nrows();
        check_dim("F cols", p, f.ncols())?;
        check_dim("Q rows", p, q.nrows())?;
        check_dim("H cols", p, h.ncols())?;
        check_dim("initial", p, initial.dim())?;
        let q = GaussianBelief::new(Vector::zeros(p), q)?.into_parts().1;
        let r = GaussianBelief::new(Vector::zeros(h.nrows()), r)?.into_parts().1;
        let gain = KernelGain::new(&q, &h, &r)?;
        Ok(Self {
            q_factor: psd_factor(&q),
            f,
            q,
            h,
            r,
            initial,
            gain,
        })
    }

    /// Scalar `Xₙ = a Xₙ₋₁ + Uₙ`, `Yₙ = Xₙ + Vₙ` with an `N(0, 1)` prior.
    pub fn scalar(a: f64, q: f64, r: f64) -> Result<Self> {
        Self::new(
            Matrix::from_element(1, 1, a),
            Matrix::from_element(1, 1, q),
            Matrix::from_element(1, 1, 1.0),
            Matrix::from_element(1, 1, r),
            GaussianBelief::scalar(0.0, 1.0)?,
        )
    }

    pub fn with_initial(mut self, initial: GaussianBelief) -> Self {
        self.initial = initial;
        self
    }

    pub fn transition_matrix(&self) -> &Matrix {
        &self.f
    }

    pub fn transition_cov(&self) -> &Matrix {
        &self.q
    }
}

impl SemiLinearGaussian for LinearGaussianModel {
    fn state_dim(&self) -> usize {
        self.f.nrows()
    }

    fn obs_dim(&self) -> usize {
        self.h.nrows()
    }

    fn drift(&self, x_prev: &Vector) -> Vector {
        &self.f * x_prev
    }

    fn noise_factor(&self, _x_prev: &Vector) -> Matrix {
        self.q_factor.clone()
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

    fn kernel_gain(&self, _x_prev: &Vector) -> Result<Cow<'_, KernelGain>> {
        Ok(Cow::Borrowed(&self.gain))
    }
}

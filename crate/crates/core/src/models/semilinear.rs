use alloc::borrow::Cow;

use super::LocalKernel;
use crate::error::{check_dim, Error, Result};
use crate::gaussian::GaussianBelief;
use crate::linalg::{psd_factor, CovFactor, Matrix, Vector};

/// `Xₙ = f(Xₙ₋₁) + K(Xₙ₋₁) Uₙ`, `Yₙ = H Xₙ + Vₙ`, with standard Gaussian
/// `Uₙ` and `Vₙ ~ N(0, R)`.
///
/// Given `xₙ₋₁` the pair `(Xₙ, Yₙ)` is jointly Gaussian, so both the optimal
/// kernel and the predictive likelihood are closed form:
///
/// ```text
/// Q = K Kᵀ,  L = H Q Hᵀ + R
/// p(xₙ | xₙ₋₁, yₙ) = N(f + Q Hᵀ L⁻¹ (y − H f),  Q − Q Hᵀ L⁻¹ H Q)
/// p(yₙ | xₙ₋₁)     = N(H f, L)
/// ```
pub trait SemiLinearGaussian: Send + Sync {
    fn state_dim(&self) -> usize;
    fn obs_dim(&self) -> usize;
    fn drift(&self, x_prev: &Vector) -> Vector;
    fn noise_factor(&self, x_prev: &Vector) -> Matrix;
    fn obs_matrix(&self) -> &Matrix;
    fn obs_noise(&self) -> &Matrix;
    fn initial(&self) -> &GaussianBelief;

    /// Gain and covariances of the optimal kernel at `x_prev`. Models whose
    /// noise does not depend on the state override this to return a cached
    /// value.
    fn kernel_gain(&self, x_prev: &Vector) -> Result<Cow<'_, KernelGain>> {
        let k = self.noise_factor(x_prev);
        Ok(Cow::Owned(KernelGain::new(&(&k * k.transpose()), self.obs_matrix(), self.obs_noise())?))
    }
}

/// Everything of the optimal kernel that does not depend on `y`.
#[derive(Debug, Clone)]
pub struct KernelGain {
    /// `Q Hᵀ L⁻¹`.
    pub gain: Matrix,
    /// Kernel covariance `Q − Q Hᵀ L⁻¹ H Q`.
    pub cov: Matrix,
    pub cov_factor: Matrix,
    /// Factorization of `L`.
    pub pred: CovFactor,
}

impl KernelGain {
    pub fn new(q: &Matrix, h: &Matrix, r: &Matrix) -> Result<Self> {
        check_dim("H cols", q.nrows(), h.ncols())?;
        check_dim("R rows", h.nrows(), r.nrows())?;
        let l = h * q * h.transpose() + r;
        let l = (&l + l.transpose()) * 0.5;
        let pred = CovFactor::new(&l).ok_or(Error::DegenerateInnovation)?;
        let hq = h * q;
        let gain = pred.solve(&hq).transpose();
        let cov = q - &gain * &hq;
        let cov = crate::linalg::condition_covariance(cov)?;
        let cov_factor = psd_factor(&cov);
        Ok(Self {
            gain,
            cov,
            cov_factor,
            pred,
        })
    }
}

pub(crate) fn local_kernel<M: SemiLinearGaussian + ?Sized>(
    model: &M,
    x_prev: &Vector,
    y: &Vector,
) -> Result<LocalKernel> {
    check_dim("observation", model.obs_dim(), y.len())?;
    let kg = model.kernel_gain(x_prev)?;
    let f = model.drift(x_prev);
    let resid = y - model.obs_matrix() * &f;
    let mean = f + &kg.gain * &resid;
    Ok(LocalKernel {
        mean,
        cov: kg.cov.clone(),
        factor: kg.cov_factor.clone(),
        log_pred: kg.pred.log_density_residual(&resid),
    })
}

/// `log N(x; m, c)`, treating a singular `c` as a point mass: `+inf` on the
/// mean and `-inf` elsewhere.
pub(crate) fn degenerate_aware_log_normal(x: &Vector, m: &Vector, c: &Matrix) -> f64 {
    match CovFactor::new(c) {
        Some(f) => f.log_density_residual(&(x - m)),
        None if (x - m).amax() == 0.0 => f64::INFINITY,
        None => f64::NEG_INFINITY,
    }
}

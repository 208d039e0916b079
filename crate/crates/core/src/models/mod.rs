//! State-space models and their closed-form (or approximate) local kernels.

mod arch;
mod jump;
pub mod kinematics;
mod linear;
mod moments;
mod semilinear;
mod sv;

pub use arch::ArchModel;
pub use jump::{LinearJmss, LinearMode, SemiLinearJmss, ModeChain};
pub use linear::LinearGaussianModel;
pub use moments::{ArchVariance, Constant, Identity, MomentFunction, ScaledExpHalf};
pub use semilinear::{KernelGain, SemiLinearGaussian};
pub use sv::{KernelMoments, StochasticVolatilityModel};

use crate::error::Result;
use crate::gaussian::GaussianBelief;
use crate::linalg::{Matrix, Vector};
use crate::rng::RngStream;

/// Generative hidden Markov model: prior, Markov transition, observation.
pub trait StateSpaceModel: Send + Sync {
    fn state_dim(&self) -> usize;
    fn obs_dim(&self) -> usize;
    fn sample_initial(&self, rng: &mut RngStream) -> Vector;
    fn sample_transition(&self, x_prev: &Vector, rng: &mut RngStream) -> Vector;
    fn transition_logdensity(&self, x: &Vector, x_prev: &Vector) -> f64;
    fn obs_logdensity(&self, y: &Vector, x: &Vector) -> f64;
    fn sample_observation(&self, x: &Vector, rng: &mut RngStream) -> Vector;
}

/// A Gaussian kernel `N(mean, cov)` for `xₙ` given `(xₙ₋₁, yₙ)`, with the
/// log predictive likelihood of `yₙ` that goes with it. Exact for semi-linear
/// models, an approximation otherwise.
#[derive(Debug, Clone)]
pub struct LocalKernel {
    pub mean: Vector,
    pub cov: Matrix,
    /// `A` with `A Aᵀ = cov`.
    pub factor: Matrix,
    pub log_pred: f64,
}

impl LocalKernel {
    pub fn sample(&self, rng: &mut RngStream) -> Vector {
        let z = rng.standard_normal_vector(self.factor.ncols());
        &self.mean + &self.factor * z
    }

    pub fn belief(&self) -> Result<GaussianBelief> {
        GaussianBelief::from_algebra(self.mean.clone(), self.cov.clone())
    }

    /// `log N(x; mean, cov)`; requires a nonsingular covariance.
    pub fn log_density(&self, x: &Vector) -> f64 {
        crate::linalg::log_normal(x, &self.mean, &self.cov).unwrap_or(f64::NEG_INFINITY)
    }
}

/// Models whose optimal importance kernel `p(xₙ|xₙ₋₁, yₙ)` and predictive
/// likelihood `p(yₙ|xₙ₋₁)` are available exactly.
pub trait OptimalKernel: StateSpaceModel {
    fn local_kernel(&self, x_prev: &Vector, y: &Vector) -> Result<LocalKernel>;

    fn optimal_kernel(&self, x_prev: &Vector, y: &Vector) -> Result<GaussianBelief> {
        self.local_kernel(x_prev, y)?.belief()
    }

    fn predictive_loglik(&self, x_prev: &Vector, y: &Vector) -> Result<f64> {
        Ok(self.local_kernel(x_prev, y)?.log_pred)
    }
}

/// Models offering a Gaussian stand-in for the optimal kernel, exact or not.
pub trait ApproxKernel: StateSpaceModel {
    fn approx_kernel(&self, x_prev: &Vector, y: &Vector) -> Result<LocalKernel>;
}

impl<M: SemiLinearGaussian> StateSpaceModel for M {
    fn state_dim(&self) -> usize {
        SemiLinearGaussian::state_dim(self)
    }

    fn obs_dim(&self) -> usize {
        SemiLinearGaussian::obs_dim(self)
    }

    fn sample_initial(&self, rng: &mut RngStream) -> Vector {
        self.initial().sample(rng)
    }

    fn sample_transition(&self, x_prev: &Vector, rng: &mut RngStream) -> Vector {
        let k = self.noise_factor(x_prev);
        let u = rng.standard_normal_vector(k.ncols());
        self.drift(x_prev) + k * u
    }

    fn transition_logdensity(&self, x: &Vector, x_prev: &Vector) -> f64 {
        let k = self.noise_factor(x_prev);
        let q = &k * k.transpose();
        semilinear::degenerate_aware_log_normal(x, &self.drift(x_prev), &q)
    }

    fn obs_logdensity(&self, y: &Vector, x: &Vector) -> f64 {
        semilinear::degenerate_aware_log_normal(y, &(self.obs_matrix() * x), self.obs_noise())
    }

    fn sample_observation(&self, x: &Vector, rng: &mut RngStream) -> Vector {
        let a = crate::linalg::psd_factor(self.obs_noise());
        self.obs_matrix() * x + a * rng.standard_normal_vector(self.obs_noise().nrows())
    }
}

impl<M: SemiLinearGaussian> OptimalKernel for M {
    fn local_kernel(&self, x_prev: &Vector, y: &Vector) -> Result<LocalKernel> {
        semilinear::local_kernel(self, x_prev, y)
    }
}

impl<M: SemiLinearGaussian> ApproxKernel for M {
    fn approx_kernel(&self, x_prev: &Vector, y: &Vector) -> Result<LocalKernel> {
        semilinear::local_kernel(self, x_prev, y)
    }
}

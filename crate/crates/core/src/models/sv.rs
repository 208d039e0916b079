use core::num::NonZeroUsize;

use gauss_quad::hermite::GaussHermite;
#[allow(unused_imports)]
use num_traits::Float;

use super::{ApproxKernel, LocalKernel, StateSpaceModel};
use crate::error::{check_dim, Error, Result};
use crate::gaussian::GaussianBelief;
use crate::linalg::{log_normal_scalar, Matrix, Vector};
use crate::rng::RngStream;

/// Stochastic volatility: `Xₙ = Φ Xₙ₋₁ + σ Uₙ`, `Yₙ = β exp(Xₙ/2) Vₙ`.
///
/// The optimal kernel has no closed form. [`ApproxKernel`] linearizes
/// `log g(y|x)` around the predicted mean `μ = Φ xₙ₋₁`:
///
/// ```text
/// log g(y|x) = −½ log(2π β²) − x/2 − y² e^{−x} / (2β²)
/// d          = ∂ₓ log g(y|μ) = −½ + y² e^{−μ} / (2β²)
/// ĝ(x)       = g(y|μ) exp(d (x − μ))
/// ```
///
/// Completing the square in `N(x; μ, σ²) ĝ(x)` gives
/// `g(y|μ) exp(d² σ² / 2) N(x; μ + σ² d, σ²)`, so the approximate kernel is
/// `N(μ + σ² d, σ²)` and the approximate predictive log-likelihood is
/// `log g(y|μ) + d² σ² / 2`.
///
/// The linearized kernel mean drifts away from the true one as σ grows.
/// With [`KernelMoments::Quadrature`] the kernel mean and variance are instead
/// the exact moments of `p(x|xₙ₋₁, y)`, computed by Gauss-Hermite quadrature
/// centred at the posterior mode. The predictive log-likelihood stays the
/// linearized one either way.
#[derive(Debug, Clone)]
pub struct StochasticVolatilityModel {
    phi: f64,
    sigma: f64,
    beta: f64,
    initial: GaussianBelief,
    quad: Option<GaussHermite>,
}

/// How [`ApproxKernel`] obtains the kernel mean and variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelMoments {
    /// First-order expansion of `log g` at `Φ xₙ₋₁`.
    #[default]
    Taylor,
    /// Gauss-Hermite quadrature of the unnormalized kernel.
    Quadrature,
}

/// Nodes of the Gauss-Hermite rule used by [`KernelMoments::Quadrature`].
pub const QUADRATURE_NODES: usize = 32;

impl StochasticVolatilityModel {
    pub fn new(phi: f64, sigma: f64, beta: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidParameter("volatility sigma must be positive"));
        }
        if !(beta > 0.0) {
            return Err(Error::InvalidParameter("volatility beta must be positive"));
        }
        if !phi.is_finite() {
            return Err(Error::InvalidParameter("volatility phi must be finite"));
        }
        Ok(Self {
            phi,
            sigma,
            beta,
            initial: GaussianBelief::scalar(0.0, 1.0)?,
            quad: None,
        })
    }

    pub fn with_kernel_moments(mut self, moments: KernelMoments) -> Self {
        self.quad = match moments {
            KernelMoments::Taylor => None,
            KernelMoments::Quadrature => {
                Some(GaussHermite::new(NonZeroUsize::new(QUADRATURE_NODES).unwrap()))
            }
        };
        self
    }

    pub fn kernel_moments(&self) -> KernelMoments {
        if self.quad.is_some() {
            KernelMoments::Quadrature
        } else {
            KernelMoments::Taylor
        }
    }

    pub fn with_initial(mut self, initial: GaussianBelief) -> Self {
        self.initial = initial;
        self
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn initial(&self) -> &GaussianBelief {
        &self.initial
    }

    #[inline]
    pub fn obs_logdensity_scalar(&self, y: f64, x: f64) -> f64 {
        log_normal_scalar(y, 0.0, self.beta * self.beta * x.exp())
    }

    /// Scalar form of the linearized kernel: `(mean, variance, log_pred)`.
    #[inline]
    pub fn taylor_kernel_scalar(&self, x_prev: f64, y: f64) -> (f64, f64, f64) {
        let mu = self.phi * x_prev;
        let s2 = self.sigma * self.sigma;
        let d = -0.5 + y * y * (-mu).exp() / (2.0 * self.beta * self.beta);
        let log_pred = self.obs_logdensity_scalar(y, mu) + 0.5 * d * d * s2;
        (mu + s2 * d, s2, log_pred)
    }

    /// Mean and variance of `p(x|xₙ₋₁, y) ∝ N(x; Φxₙ₋₁, σ²) g(y|x)`.
    ///
    /// The log-kernel `l(x) = −(x−μ)²/(2σ²) − x/2 − c e^{−x}` with
    /// `c = y²/(2β²)` is strictly concave, so Newton finds its mode `m`
    /// safely. Substituting `x = m + √2 τ t` with `τ² = −1/l''(m)` leaves a
    /// near-Gaussian integrand against `e^{−t²}`.
    pub fn kernel_moments_scalar(&self, x_prev: f64, y: f64) -> (f64, f64) {
        let quad = match &self.quad {
            Some(q) => q,
            None => {
                let (m, v, _) = self.taylor_kernel_scalar(x_prev, y);
                return (m, v);
            }
        };
        let mu = self.phi * x_prev;
        let s2 = self.sigma * self.sigma;
        let c = y * y / (2.0 * self.beta * self.beta);
        let l = |x: f64| -(x - mu) * (x - mu) / (2.0 * s2) - 0.5 * x - c * (-x).exp();
        let mut m = self.taylor_kernel_scalar(x_prev, y).0;
        for _ in 0..50 {
            let e = c * (-m).exp();
            let g = -(m - mu) / s2 - 0.5 + e;
            let h = 1.0 / s2 + e;
            let step = g / h;
            m += step;
            if step.abs() < 1e-12 * (1.0 + m.abs()) {
                break;
            }
        }
        let tau = 1.0 / (1.0 / s2 + c * (-m).exp()).sqrt();
        let scale = core::f64::consts::SQRT_2 * tau;
        let lm = l(m);
        let (mut z, mut s1, mut sq) = (0.0, 0.0, 0.0);
        for &(t, wt) in quad.as_node_weight_pairs() {
            let u = scale * t;
            let w = wt * (l(m + u) - lm + t * t).exp();
            z += w;
            s1 += w * u;
            sq += w * u * u;
        }
        let d = s1 / z;
        (m + d, (sq / z - d * d).max(f64::MIN_POSITIVE))
    }

    pub fn sv_taylor_kernel(&self, x_prev: f64, y: f64) -> (GaussianBelief, f64) {
        let (m, v, lp) = self.taylor_kernel_scalar(x_prev, y);
        let b = GaussianBelief::scalar(m, v).expect("positive variance");
        (b, lp)
    }
}

impl StateSpaceModel for StochasticVolatilityModel {
    fn state_dim(&self) -> usize {
        1
    }

    fn obs_dim(&self) -> usize {
        1
    }

    fn sample_initial(&self, rng: &mut RngStream) -> Vector {
        self.initial.sample(rng)
    }

    fn sample_transition(&self, x_prev: &Vector, rng: &mut RngStream) -> Vector {
        Vector::from_element(1, self.phi * x_prev[0] + self.sigma * rng.standard_normal())
    }

    fn transition_logdensity(&self, x: &Vector, x_prev: &Vector) -> f64 {
        log_normal_scalar(x[0], self.phi * x_prev[0], self.sigma * self.sigma)
    }

    fn obs_logdensity(&self, y: &Vector, x: &Vector) -> f64 {
        self.obs_logdensity_scalar(y[0], x[0])
    }

    fn sample_observation(&self, x: &Vector, rng: &mut RngStream) -> Vector {
        Vector::from_element(1, self.beta * (0.5 * x[0]).exp() * rng.standard_normal())
    }
}

impl ApproxKernel for StochasticVolatilityModel {
    fn approx_kernel(&self, x_prev: &Vector, y: &Vector) -> Result<LocalKernel> {
        check_dim("observation", 1, y.len())?;
        let (mut m, mut v, lp) = self.taylor_kernel_scalar(x_prev[0], y[0]);
        if self.quad.is_some() {
            (m, v) = self.kernel_moments_scalar(x_prev[0], y[0]);
        }
        Ok(LocalKernel {
            mean: Vector::from_element(1, m),
            cov: Matrix::from_element(1, 1, v),
            factor: Matrix::from_element(1, 1, v.sqrt()),
            log_pred: lp,
        })
    }
}

//! Core-crate models built from a config.

use anyhow::{ensure, Result};
use seqcmc_core::models::kinematics::{
    constant_velocity, coordinated_turn, position_noise, position_observation,
    white_acceleration_cov,
};
use seqcmc_core::models::{
    ArchModel, ArchVariance, Identity, LinearGaussianModel, LinearJmss, LinearMode, ModeChain,
    KernelMoments, MomentFunction, ScaledExpHalf, StochasticVolatilityModel,
};
use seqcmc_core::phd::{GaussianMixture, PhdModelParams, Survival, UniformClutter};
use seqcmc_core::{GaussianBelief, Matrix, Vector};

use crate::config::{
    JmssScenario, MomentName, PhdScenario, SingleModel, SingleScenario, SvKernelMoments,
};

/// The scalar models of the single-target experiments.
#[derive(Debug, Clone)]
pub enum ScalarModel {
    Linear(LinearGaussianModel),
    Arch(ArchModel),
    Sv(StochasticVolatilityModel),
}

impl ScalarModel {
    pub fn build(s: &SingleScenario) -> Result<Self> {
        let prior = match s.prior {
            Some(p) => GaussianBelief::scalar(p.mean, p.var)?,
            None => default_prior(&s.model)?,
        };
        Ok(match s.model {
            SingleModel::Linear { a, q, r } => {
                ScalarModel::Linear(LinearGaussianModel::scalar(a, q, r)?.with_initial(prior))
            }
            SingleModel::Arch { beta0, beta1, r } => {
                ScalarModel::Arch(ArchModel::new(beta0, beta1, r)?.with_initial(prior))
            }
            SingleModel::Sv { phi, sigma, beta, kernel_moments } => ScalarModel::Sv(
                StochasticVolatilityModel::new(phi, sigma, beta)?
                    .with_initial(prior)
                    .with_kernel_moments(match kernel_moments {
                        SvKernelMoments::Taylor => KernelMoments::Taylor,
                        SvKernelMoments::Quadrature => KernelMoments::Quadrature,
                    }),
            ),
        })
    }

    pub fn prior(&self) -> (f64, f64) {
        let b = match self {
            ScalarModel::Linear(m) => seqcmc_core::models::SemiLinearGaussian::initial(m),
            ScalarModel::Arch(m) => seqcmc_core::models::SemiLinearGaussian::initial(m),
            ScalarModel::Sv(m) => m.initial(),
        };
        (b.mean()[0], b.cov()[(0, 0)])
    }
}

/// Stationary law for the SV model when it exists, `N(0, 1)` otherwise.
fn default_prior(model: &SingleModel) -> Result<GaussianBelief> {
    let var = match *model {
        SingleModel::Sv { phi, sigma, .. } if phi.abs() < 1.0 => sigma * sigma / (1.0 - phi * phi),
        _ => 1.0,
    };
    Ok(GaussianBelief::scalar(0.0, var)?)
}

pub fn moment(s: &SingleScenario) -> Box<dyn MomentFunction> {
    match (s.moment, s.model) {
        (MomentName::ArchVariance, SingleModel::Arch { beta0, beta1, .. }) => {
            Box::new(ArchVariance { beta0, beta1 })
        }
        (MomentName::ScaledExpHalf, SingleModel::Sv { beta, .. }) => {
            Box::new(ScaledExpHalf { beta })
        }
        _ => Box::new(Identity(1)),
    }
}

/// `f` on a scalar state, for the reference filter and truth errors.
pub fn scalar_moment(s: &SingleScenario) -> impl Fn(f64) -> f64 + Copy {
    let (kind, a, b) = match (s.moment, s.model) {
        (MomentName::ArchVariance, SingleModel::Arch { beta0, beta1, .. }) => (1, beta0, beta1),
        (MomentName::ScaledExpHalf, SingleModel::Sv { beta, .. }) => (2, beta, 0.0),
        _ => (0, 0.0, 0.0),
    };
    move |x: f64| match kind {
        1 => a + b * x * x,
        2 => a * (x / 2.0).exp(),
        _ => x,
    }
}

pub fn diag(v: &[f64]) -> Matrix {
    Matrix::from_diagonal(&Vector::from_column_slice(v))
}

pub fn build_jmss(s: &JmssScenario) -> Result<LinearJmss> {
    let t = s.sample_period;
    let modes = s
        .turn_rates_deg
        .iter()
        .map(|deg| LinearMode {
            f: coordinated_turn(deg.to_radians(), t),
            g: Matrix::identity(4, 4),
            h: position_observation(),
            l: Matrix::identity(2, 2),
        })
        .collect();
    let chain = ModeChain::symmetric(s.turn_rates_deg.len(), s.stay)?;
    let initial = GaussianBelief::new(
        Vector::from_column_slice(&s.initial_mean),
        diag(&s.initial_cov_diag),
    )?;
    Ok(LinearJmss::new(
        modes,
        white_acceleration_cov(s.sigma_v, t),
        position_noise(s.sigma_x, s.sigma_y),
        chain,
        initial,
    )?)
}

pub fn birth_mixture(s: &PhdScenario) -> Result<GaussianMixture> {
    let cov = diag(&s.birth.cov_diag);
    let comps = s
        .birth
        .sites
        .iter()
        .map(|m| Ok((s.birth.weight, GaussianBelief::new(Vector::from_column_slice(m), cov.clone())?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(GaussianMixture::new(comps)?)
}

pub fn build_phd(s: &PhdScenario) -> Result<PhdModelParams<LinearGaussianModel>> {
    let t = s.sample_period;
    let birth = birth_mixture(s)?;
    ensure!(!birth.is_empty(), "empty birth mixture");
    let initial = birth.components()[0].1.clone();
    let model = LinearGaussianModel::new(
        constant_velocity(t),
        white_acceleration_cov(s.sigma_v, t),
        position_observation(),
        position_noise(s.sigma_x, s.sigma_y),
        initial,
    )?;
    let [[x0, x1], [y0, y1]] = s.region;
    let params = PhdModelParams {
        p_d: s.p_d,
        survival: Survival::Constant(s.p_s),
        clutter: UniformClutter::new(
            s.clutter_rate,
            Vector::from_column_slice(&[x0, y0]),
            Vector::from_column_slice(&[x1, y1]),
        )?,
        birth,
        model,
    };
    params.validate()?;
    Ok(params)
}

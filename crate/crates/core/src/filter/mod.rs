//! Single-object particle filters with paired crude and conditional
//! Monte Carlo estimators.
//!
//! Every step consumes `yₙ` and the weighted cloud at `n − 1`. Estimators that
//! condition on the past are computed from the pre-resampling cloud, since
//! resampling only adds variance.

mod generic;
mod sir;

pub use generic::{generic_proposal_step, CmcMode, KernelProposal, Proposal, TransitionProposal};
pub use sir::{bootstrap_step, cmc_sir_step, fa_step, sir_step, Propagation};

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::models::{MomentFunction, StateSpaceModel};
use crate::resample::{resample, ResamplePolicy};
use crate::rng::RngStream;
use crate::weights::{ess, WeightedParticleSet};

/// A maximum normalized weight above this is reported as degenerate.
pub const DEGENERACY_LIMIT: f64 = 1.0 - 1e-9;
/// A maximum normalized weight above this flags an importance-weight blow-up.
pub const BLOWUP_LIMIT: f64 = 0.99;

/// The marginal particle cloud between steps.
#[derive(Debug, Clone)]
pub struct FilterState {
    pub set: WeightedParticleSet,
    pub step: usize,
    /// Weighted cloud the last estimates were computed from.
    pub last_pre_resample: Option<WeightedParticleSet>,
}

impl FilterState {
    pub fn new(set: WeightedParticleSet) -> Self {
        Self {
            set,
            step: 0,
            last_pre_resample: None,
        }
    }

    /// `n` equally weighted draws from the model prior.
    pub fn from_prior<M: StateSpaceModel + ?Sized>(
        model: &M,
        n: usize,
        rng: &mut RngStream,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty);
        }
        let particles = (0..n).map(|_| model.sample_initial(rng)).collect();
        Ok(Self::new(WeightedParticleSet::uniform(particles)?))
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }
}

/// Estimates and weight diagnostics from one filter step.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorReport {
    pub crude: Vector,
    /// The step's conditional estimator, when it has one.
    pub cmc: Option<Vector>,
    /// A second conditional estimator sharing the same cloud: the SIR form
    /// on an FA-propagated cloud, or the predictive-weighted form of the
    /// generic-proposal step.
    pub cmc_alt: Option<Vector>,
    pub ess: f64,
    /// `log Σ wₙ₋₁ⁱ × incremental weight`, an estimate of `log p(yₙ|y₀:ₙ₋₁)`.
    pub log_normalizer: f64,
    pub degenerate: bool,
    pub weight_blowup: bool,
    pub resampled: bool,
}

pub(crate) fn weighted_sum(weights: &[f64], values: impl Iterator<Item = Vector>) -> Vector {
    let mut acc: Option<Vector> = None;
    for (w, v) in weights.iter().zip(values) {
        let v = v * *w;
        match acc.as_mut() {
            Some(a) => *a += v,
            None => acc = Some(v),
        }
    }
    acc.expect("nonempty weights")
}

pub(crate) fn conditional<F: MomentFunction + ?Sized>(
    f: &F,
    mean: &Vector,
    cov: &Matrix,
) -> Result<Vector> {
    f.conditional(mean, cov).ok_or(Error::NoClosedForm)
}

pub(crate) fn log_weights_of(set: &WeightedParticleSet) -> Vec<f64> {
    set.weights().iter().map(|w| num_traits::Float::ln(*w)).collect()
}

/// Applies `policy` to a normalized pre-resampling cloud.
pub(crate) fn finish_step(
    step: usize,
    pre: WeightedParticleSet,
    policy: &ResamplePolicy,
    rng: &mut RngStream,
) -> Result<(FilterState, f64, bool)> {
    let e = ess(pre.weights())?;
    let n = pre.len();
    let (set, resampled) = if policy.should_resample(e, n) {
        (resample(&pre, n, rng, policy.scheme)?, true)
    } else {
        (pre.clone(), false)
    };
    Ok((
        FilterState {
            set,
            step: step + 1,
            last_pre_resample: Some(pre),
        },
        e,
        resampled,
    ))
}

use alloc::vec::Vec;

use super::{
    conditional, finish_step, log_weights_of, weighted_sum, EstimatorReport, FilterState,
    BLOWUP_LIMIT, DEGENERACY_LIMIT,
};
use crate::error::Result;
use crate::linalg::Vector;
use crate::models::{ApproxKernel, MomentFunction, StateSpaceModel};
use crate::resample::ResamplePolicy;
use crate::rng::RngStream;
use crate::weights::{normalize_weights, WeightedParticleSet};

/// Importance distribution `q(xₙ | xₙ₋₁, yₙ)`.
pub trait Proposal: Send + Sync {
    fn sample(&self, x_prev: &Vector, y: &Vector, rng: &mut RngStream) -> Result<Vector>;
    /// `log f(x|xₙ₋₁) − log q(x|xₙ₋₁, yₙ)`.
    fn log_prior_ratio(&self, x: &Vector, x_prev: &Vector, y: &Vector) -> f64;
}

/// `q = f`, the prior transition. The ratio is identically zero.
pub struct TransitionProposal<'a, M: ?Sized>(pub &'a M);

impl<M: StateSpaceModel + ?Sized> Proposal for TransitionProposal<'_, M> {
    fn sample(&self, x_prev: &Vector, _y: &Vector, rng: &mut RngStream) -> Result<Vector> {
        Ok(self.0.sample_transition(x_prev, rng))
    }

    fn log_prior_ratio(&self, _x: &Vector, _x_prev: &Vector, _y: &Vector) -> f64 {
        0.0
    }
}

/// `q` = the model's Gaussian local kernel (exact or approximate).
pub struct KernelProposal<'a, M: ?Sized>(pub &'a M);

impl<M: ApproxKernel + ?Sized> Proposal for KernelProposal<'_, M> {
    fn sample(&self, x_prev: &Vector, y: &Vector, rng: &mut RngStream) -> Result<Vector> {
        Ok(self.0.approx_kernel(x_prev, y)?.sample(rng))
    }

    fn log_prior_ratio(&self, x: &Vector, x_prev: &Vector, y: &Vector) -> f64 {
        let lq = match self.0.approx_kernel(x_prev, y) {
            Ok(k) => k.log_density(x),
            Err(_) => return f64::NEG_INFINITY,
        };
        self.0.transition_logdensity(x, x_prev) - lq
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmcMode {
    /// Weights `w f g / q` on the new samples; the conditional moment of the
    /// (approximate) kernel replaces `f(x̃)`.
    KernelOnly,
    /// Weights `w p̂(yₙ|xₙ₋₁)` on the previous cloud, before sampling.
    KernelAndPredictive,
    /// Both: `cmc` holds the kernel-only form, `cmc_alt` the predictive one.
    Both,
}

/// SIR step with an arbitrary proposal, for models without an exact optimal
/// kernel.
pub fn generic_proposal_step<M, F, Q>(
    state: &FilterState,
    model: &M,
    y: &Vector,
    f: &F,
    proposal: &Q,
    mode: CmcMode,
    policy: &ResamplePolicy,
    rng: &mut RngStream,
) -> Result<(FilterState, EstimatorReport)>
where
    M: ApproxKernel + ?Sized,
    F: MomentFunction + ?Sized,
    Q: Proposal + ?Sized,
{
    let prev = state.set.particles();
    let prev_logw = log_weights_of(&state.set);
    let particles: Vec<Vector> = prev
        .iter()
        .map(|x| proposal.sample(x, y, rng))
        .collect::<Result<_>>()?;
    let logw: Vec<f64> = prev_logw
        .iter()
        .zip(prev.iter().zip(&particles))
        .map(|(lw, (xp, x))| lw + model.obs_logdensity(y, x) + proposal.log_prior_ratio(x, xp, y))
        .collect();
    let (w, log_normalizer) = normalize_weights(&logw)?;
    let crude = weighted_sum(&w, particles.iter().map(|x| f.eval(x)));

    let ks = prev
        .iter()
        .map(|x| model.approx_kernel(x, y))
        .collect::<Result<Vec<_>>>()?;
    let moments: Vec<Vector> = ks
        .iter()
        .map(|k| conditional(f, &k.mean, &k.cov))
        .collect::<Result<_>>()?;
    let kernel_only = || weighted_sum(&w, moments.iter().cloned());
    let with_predictive = || -> Result<Vector> {
        let lv: Vec<f64> = prev_logw.iter().zip(&ks).map(|(lw, k)| lw + k.log_pred).collect();
        let (v, _) = normalize_weights(&lv)?;
        Ok(weighted_sum(&v, moments.iter().cloned()))
    };
    let (cmc, cmc_alt) = match mode {
        CmcMode::KernelOnly => (kernel_only(), None),
        CmcMode::KernelAndPredictive => (with_predictive()?, None),
        CmcMode::Both => (kernel_only(), Some(with_predictive()?)),
    };

    let max_w = w.iter().copied().fold(0.0, f64::max);
    let pre = WeightedParticleSet::from_normalized_unchecked(particles, w);
    let (next, e, resampled) = finish_step(state.step, pre, policy, rng)?;
    Ok((
        next,
        EstimatorReport {
            crude,
            cmc: Some(cmc),
            cmc_alt,
            ess: e,
            log_normalizer,
            degenerate: max_w > DEGENERACY_LIMIT,
            weight_blowup: max_w > BLOWUP_LIMIT,
            resampled,
        },
    ))
}

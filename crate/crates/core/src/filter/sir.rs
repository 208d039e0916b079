use alloc::vec::Vec;

use super::{
    conditional, finish_step, log_weights_of, weighted_sum, EstimatorReport, FilterState,
    BLOWUP_LIMIT, DEGENERACY_LIMIT,
};
use crate::error::Result;
use crate::linalg::Vector;
use crate::models::{LocalKernel, MomentFunction, OptimalKernel, StateSpaceModel};
use crate::resample::{resample_indices, ResamplePolicy, ResampleScheme};
use crate::rng::RngStream;
use crate::weights::{ess, normalize_weights, WeightedParticleSet};

fn kernels<M: OptimalKernel + ?Sized>(
    model: &M,
    set: &WeightedParticleSet,
    y: &Vector,
) -> Result<Vec<LocalKernel>> {
    set.particles()
        .iter()
        .map(|x| model.local_kernel(x, y))
        .collect()
}

/// SIR step with the optimal kernel.
///
/// Reweights by `p(yₙ|xₙ₋₁)` before sampling, forms the conditional estimate
/// `Σ w̃ⁱ E[f | xₙ₋₁ⁱ, yₙ]`, samples from `p(xₙ|xₙ₋₁, yₙ)`, forms the crude
/// estimate `Σ w̃ⁱ f(x̃ₙⁱ)`, then resamples according to `policy`.
pub fn sir_step<M, F>(
    state: &FilterState,
    model: &M,
    y: &Vector,
    f: &F,
    policy: &ResamplePolicy,
    rng: &mut RngStream,
) -> Result<(FilterState, EstimatorReport)>
where
    M: OptimalKernel + ?Sized,
    F: MomentFunction + ?Sized,
{
    let ks = kernels(model, &state.set, y)?;
    let logw: Vec<f64> = log_weights_of(&state.set)
        .iter()
        .zip(&ks)
        .map(|(lw, k)| lw + k.log_pred)
        .collect();
    let (w, log_normalizer) = normalize_weights(&logw)?;
    let cmc = weighted_sum(
        &w,
        ks.iter()
            .map(|k| conditional(f, &k.mean, &k.cov))
            .collect::<Result<Vec<_>>>()?
            .into_iter(),
    );
    let particles: Vec<Vector> = ks.iter().map(|k| k.sample(rng)).collect();
    let crude = weighted_sum(&w, particles.iter().map(|x| f.eval(x)));
    let max_w = w.iter().copied().fold(0.0, f64::max);
    let pre = WeightedParticleSet::from_normalized_unchecked(particles, w);
    let (next, e, resampled) = finish_step(state.step, pre, policy, rng)?;
    Ok((
        next,
        EstimatorReport {
            crude,
            cmc: Some(cmc),
            cmc_alt: None,
            ess: e,
            log_normalizer,
            degenerate: max_w > DEGENERACY_LIMIT,
            weight_blowup: max_w > BLOWUP_LIMIT,
            resampled,
        },
    ))
}

/// Fully adapted auxiliary step.
///
/// Reweights by `p(yₙ|xₙ₋₁)`, resamples ancestors, then samples each new
/// particle from the optimal kernel of its ancestor. `cmc` is the
/// resampled-ancestor form `(1/N) Σ E[f | x̃ₙ₋₁ⁱ, yₙ]`; `cmc_alt` is the SIR
/// form `Σ w̃ⁱ E[f | xₙ₋₁ⁱ, yₙ]` evaluated on the same cloud before the
/// ancestor draw.
pub fn fa_step<M, F>(
    state: &FilterState,
    model: &M,
    y: &Vector,
    f: &F,
    scheme: ResampleScheme,
    rng: &mut RngStream,
) -> Result<(FilterState, EstimatorReport)>
where
    M: OptimalKernel + ?Sized,
    F: MomentFunction + ?Sized,
{
    let n = state.len();
    let ks = kernels(model, &state.set, y)?;
    let logw: Vec<f64> = log_weights_of(&state.set)
        .iter()
        .zip(&ks)
        .map(|(lw, k)| lw + k.log_pred)
        .collect();
    let (w, log_normalizer) = normalize_weights(&logw)?;
    let moments: Vec<Vector> = ks
        .iter()
        .map(|k| conditional(f, &k.mean, &k.cov))
        .collect::<Result<_>>()?;
    let cmc_sir = weighted_sum(&w, moments.iter().cloned());
    let e = ess(&w)?;
    let max_w = w.iter().copied().fold(0.0, f64::max);

    let ancestors = resample_indices(&w, n, scheme, rng)?;
    let uniform = alloc::vec![1.0 / n as f64; n];
    let cmc = weighted_sum(&uniform, ancestors.iter().map(|&a| moments[a].clone()));
    let particles: Vec<Vector> = ancestors.iter().map(|&a| ks[a].sample(rng)).collect();
    let crude = weighted_sum(&uniform, particles.iter().map(|x| f.eval(x)));

    let pre = WeightedParticleSet::from_normalized_unchecked(state.set.particles().to_vec(), w);
    Ok((
        FilterState {
            set: WeightedParticleSet::from_normalized_unchecked(particles, uniform),
            step: state.step + 1,
            last_pre_resample: Some(pre),
        },
        EstimatorReport {
            crude,
            cmc: Some(cmc),
            cmc_alt: Some(cmc_sir),
            ess: e,
            log_normalizer,
            degenerate: max_w > DEGENERACY_LIMIT,
            weight_blowup: max_w > BLOWUP_LIMIT,
            resampled: true,
        },
    ))
}

/// Bootstrap step: propose from the transition, weight by `g(yₙ|xₙ)`.
/// Only the crude estimate exists.
pub fn bootstrap_step<M, F>(
    state: &FilterState,
    model: &M,
    y: &Vector,
    f: &F,
    policy: &ResamplePolicy,
    rng: &mut RngStream,
) -> Result<(FilterState, EstimatorReport)>
where
    M: StateSpaceModel + ?Sized,
    F: MomentFunction + ?Sized,
{
    let particles: Vec<Vector> = state
        .set
        .particles()
        .iter()
        .map(|x| model.sample_transition(x, rng))
        .collect();
    let logw: Vec<f64> = log_weights_of(&state.set)
        .iter()
        .zip(&particles)
        .map(|(lw, x)| lw + model.obs_logdensity(y, x))
        .collect();
    let (w, log_normalizer) = normalize_weights(&logw)?;
    let crude = weighted_sum(&w, particles.iter().map(|x| f.eval(x)));
    let max_w = w.iter().copied().fold(0.0, f64::max);
    let pre = WeightedParticleSet::from_normalized_unchecked(particles, w);
    let (next, e, resampled) = finish_step(state.step, pre, policy, rng)?;
    Ok((
        next,
        EstimatorReport {
            crude,
            cmc: None,
            cmc_alt: None,
            ess: e,
            log_normalizer,
            degenerate: max_w > DEGENERACY_LIMIT,
            weight_blowup: max_w > BLOWUP_LIMIT,
            resampled,
        },
    ))
}

/// How the cloud feeding the SIR conditional estimator is propagated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Propagation {
    Sir(ResamplePolicy),
    Fa(ResampleScheme),
}

/// One step of either propagation. In the returned report `cmc` is always
/// the SIR-form conditional estimate `Σ w̃ⁱ E[f | xₙ₋₁ⁱ, yₙ]`, so the two
/// propagations can be compared on the same estimator.
pub fn cmc_sir_step<M, F>(
    state: &FilterState,
    model: &M,
    y: &Vector,
    f: &F,
    propagation: Propagation,
    rng: &mut RngStream,
) -> Result<(FilterState, EstimatorReport)>
where
    M: OptimalKernel + ?Sized,
    F: MomentFunction + ?Sized,
{
    match propagation {
        Propagation::Sir(policy) => sir_step(state, model, y, f, &policy, rng),
        Propagation::Fa(scheme) => {
            let (next, mut report) = fa_step(state, model, y, f, scheme, rng)?;
            core::mem::swap(&mut report.cmc, &mut report.cmc_alt);
            Ok((next, report))
        }
    }
}

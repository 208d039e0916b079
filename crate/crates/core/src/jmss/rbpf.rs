use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::filter::DEGENERACY_LIMIT;
use crate::gaussian::GaussianBelief;
use crate::kalman::{kalman_predict_full, kalman_update};
use crate::linalg::Vector;
use crate::models::{LinearJmss, MomentFunction};
use crate::resample::{resample_indices, ResamplePolicy};
use crate::rng::RngStream;
use crate::weights::{ess, normalize_weights};

/// Sufficient statistics of one mode trajectory: its last mode and the
/// Kalman belief of the state given that trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpParticle {
    pub weight: f64,
    pub mode: usize,
    pub belief: GaussianBelief,
}

/// `n` equally weighted particles with modes drawn from the initial law and
/// the common initial belief.
pub fn rbpf_init(model: &LinearJmss, n: usize, rng: &mut RngStream) -> Vec<JumpParticle> {
    (0..n)
        .map(|_| JumpParticle {
            weight: 1.0 / n as f64,
            mode: model.chain().sample_initial(rng),
            belief: model.initial().clone(),
        })
        .collect()
}

/// The `N × K` Kalman updates of one step, shared by both estimators.
#[derive(Debug, Clone)]
pub struct RbpfPropagation {
    /// `posteriors[i][r]`: belief of `xₙ` given the trajectory of particle
    /// `i` extended by mode `r`.
    pub posteriors: Vec<Vec<GaussianBelief>>,
    /// Normalized `w̃ⁱ ∝ wⁱ Σ_r p(r|rₙ₋₁ⁱ) N(yₙ; ỹⁱ(r), Sⁱ(r))`.
    pub weights: Vec<f64>,
    /// `mode_post[i][r] = p(r | r₀:ₙ₋₁ⁱ, y₀:ₙ)`, rows sum to one.
    pub mode_post: Vec<Vec<f64>>,
    pub log_normalizer: f64,
}

pub fn rbpf_propagate(
    particles: &[JumpParticle],
    model: &LinearJmss,
    y: &Vector,
) -> Result<RbpfPropagation> {
    if particles.is_empty() {
        return Err(Error::Empty);
    }
    let k = model.n_modes();
    let mut posteriors = Vec::with_capacity(particles.len());
    let mut mode_post = Vec::with_capacity(particles.len());
    let mut logw = Vec::with_capacity(particles.len());
    let mut joint = alloc::vec![0.0; k];
    for p in particles {
        let mut row = Vec::with_capacity(k);
        for (r, slot) in joint.iter_mut().enumerate() {
            let m = model.mode(r);
            let pred = kalman_predict_full(&p.belief, &m.f, model.process_cov(r))?;
            let (post, ll) = kalman_update(&pred, &m.h, model.obs_cov(r), y)?;
            *slot = model.chain().prob(p.mode, r).ln() + ll;
            row.push(post);
        }
        let (post_r, lz) = normalize_weights(&joint)?;
        logw.push(p.weight.ln() + lz);
        posteriors.push(row);
        mode_post.push(post_r);
    }
    let (weights, log_normalizer) = normalize_weights(&logw)?;
    Ok(RbpfPropagation {
        posteriors,
        weights,
        mode_post,
        log_normalizer,
    })
}

/// `Σᵢ w̃ⁱ Σ_r p(r|·) E[φ | r₀:ₙ₋₁ⁱ, r, y₀:ₙ]`.
pub fn rbpf_cmc<F: MomentFunction + ?Sized>(prop: &RbpfPropagation, phi: &F) -> Result<Vector> {
    let mut acc = Vector::zeros(phi.dim());
    for ((w, row), post) in prop.weights.iter().zip(&prop.posteriors).zip(&prop.mode_post) {
        for (b, pr) in row.iter().zip(post) {
            let c = phi.conditional(b.mean(), b.cov()).ok_or(Error::NoClosedForm)?;
            acc += c * (w * pr);
        }
    }
    Ok(acc)
}

/// One mode per particle from its mode posterior.
pub fn rbpf_sample_modes(prop: &RbpfPropagation, rng: &mut RngStream) -> Vec<usize> {
    prop.mode_post.iter().map(|p| rng.categorical(p)).collect()
}

/// `Σᵢ w̃ⁱ E[φ | r₀:ₙⁱ, y₀:ₙ]` with `rₙⁱ` the sampled modes.
pub fn rbpf_crude<F: MomentFunction + ?Sized>(
    prop: &RbpfPropagation,
    modes: &[usize],
    phi: &F,
) -> Result<Vector> {
    let mut acc = Vector::zeros(phi.dim());
    for ((w, row), &r) in prop.weights.iter().zip(&prop.posteriors).zip(modes) {
        let b = &row[r];
        acc += phi.conditional(b.mean(), b.cov()).ok_or(Error::NoClosedForm)? * *w;
    }
    Ok(acc)
}

/// Extends each trajectory with its sampled mode and applies `policy`.
/// Returns the new particles and whether resampling happened.
pub fn rbpf_advance(
    prop: RbpfPropagation,
    modes: &[usize],
    policy: &ResamplePolicy,
    rng: &mut RngStream,
) -> Result<(Vec<JumpParticle>, bool)> {
    let n = prop.weights.len();
    let e = ess(&prop.weights)?;
    let mut particles: Vec<JumpParticle> = prop
        .posteriors
        .into_iter()
        .zip(modes)
        .zip(&prop.weights)
        .map(|((mut row, &r), &w)| JumpParticle {
            weight: w,
            mode: r,
            belief: row.swap_remove(r),
        })
        .collect();
    if policy.should_resample(e, n) {
        let idx = resample_indices(&prop.weights, n, policy.scheme, rng)?;
        particles = idx
            .into_iter()
            .map(|i| JumpParticle {
                weight: 1.0 / n as f64,
                ..particles[i].clone()
            })
            .collect();
        return Ok((particles, true));
    }
    Ok((particles, false))
}

#[derive(Debug, Clone)]
pub struct RbpfOutput {
    pub particles: Vec<JumpParticle>,
    pub crude: Vector,
    pub cmc: Vector,
    pub ess: f64,
    pub log_normalizer: f64,
    pub degenerate: bool,
    pub resampled: bool,
}

/// Full Rao-Blackwellized step: shared Kalman updates, conditional estimate
/// over all modes, sampled-mode crude estimate, advance.
pub fn rbpf_step<F: MomentFunction + ?Sized>(
    particles: &[JumpParticle],
    model: &LinearJmss,
    y: &Vector,
    phi: &F,
    policy: &ResamplePolicy,
    rng: &mut RngStream,
) -> Result<RbpfOutput> {
    let prop = rbpf_propagate(particles, model, y)?;
    let cmc = rbpf_cmc(&prop, phi)?;
    let modes = rbpf_sample_modes(&prop, rng);
    let crude = rbpf_crude(&prop, &modes, phi)?;
    let e = ess(&prop.weights)?;
    let max_w = prop.weights.iter().copied().fold(0.0, f64::max);
    let log_normalizer = prop.log_normalizer;
    let (particles, resampled) = rbpf_advance(prop, &modes, policy, rng)?;
    Ok(RbpfOutput {
        particles,
        crude,
        cmc,
        ess: e,
        log_normalizer,
        degenerate: max_w > DEGENERACY_LIMIT,
        resampled,
    })
}

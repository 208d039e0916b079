use alloc::vec::Vec;

use super::{ln, exp, PhdModelParams, PhdParticleSet};
use crate::error::Result;
use crate::linalg::Vector;
use crate::models::{SemiLinearGaussian, StateSpaceModel};
use crate::resample::{resample_indices, ResampleScheme};
use crate::rng::RngStream;
use crate::weights::log_sum_exp;

/// Result of one SMC-PHD predict/update.
#[derive(Debug, Clone)]
pub struct SmcPhdOutput {
    /// Updated intensity, persistent particles first, then birth particles.
    pub set: PhdParticleSet,
    /// Per measurement: `Σⱼ p_d g(z|xⱼ) wⱼ / C(z)`, the mass that `z` claims.
    pub measurement_mass: Vec<f64>,
    /// Per measurement: the mean of the particles weighted by that claim.
    pub measurement_mean: Vec<Option<Vector>>,
}

/// Standard particle PHD recursion.
///
/// Persistent particles move through the transition with weight
/// `p_s(x) w`; `birth` particles are appended as given. Each predicted
/// particle is then reweighted by
/// `(1 − p_d) + Σ_z p_d g(z|x) / (κ(z) + Σⱼ p_d g(z|xⱼ) wⱼ)`.
pub fn smc_phd_step<M: SemiLinearGaussian>(
    set: &PhdParticleSet,
    birth: &PhdParticleSet,
    params: &PhdModelParams<M>,
    zs: &[Vector],
    rng: &mut RngStream,
) -> Result<SmcPhdOutput> {
    params.validate()?;
    let model = &params.model;
    let n_pred = set.len() + birth.len();
    let mut particles = Vec::with_capacity(n_pred);
    let mut logw = Vec::with_capacity(n_pred);
    for (x, w) in set.particles().iter().zip(set.weights()) {
        let xs = model.sample_transition(x, rng);
        logw.push(ln(params.survival.prob(x)) + ln(*w));
        particles.push(xs);
    }
    for (x, w) in birth.particles().iter().zip(birth.weights()) {
        particles.push(x.clone());
        logw.push(ln(*w));
    }

    let ln_pd = ln(params.p_d);
    // log(p_d g(z|xⱼ) wⱼ) for every measurement and particle.
    let mut claims: Vec<Vec<f64>> = Vec::with_capacity(zs.len());
    let mut ln_norm = Vec::with_capacity(zs.len());
    for z in zs {
        let row: Vec<f64> = particles
            .iter()
            .zip(&logw)
            .map(|(x, lw)| ln_pd + model.obs_logdensity(z, x) + lw)
            .collect();
        let mut terms = row.clone();
        terms.push(ln(params.clutter.intensity(z)));
        ln_norm.push(log_sum_exp(&terms));
        claims.push(row);
    }
    let mut weights: Vec<f64> = logw.iter().map(|lw| (1.0 - params.p_d) * exp(*lw)).collect();
    let mut measurement_mass = Vec::with_capacity(zs.len());
    let mut measurement_mean = Vec::with_capacity(zs.len());
    for (row, lc) in claims.iter().zip(&ln_norm) {
        let mut mass = 0.0;
        let mut mean = Vector::zeros(model.state_dim());
        for (j, l) in row.iter().enumerate() {
            let c = if lc.is_finite() { exp(l - lc) } else { 0.0 };
            if c > 0.0 {
                weights[j] += c;
                mass += c;
                mean += &particles[j] * c;
            }
        }
        measurement_mean.push(if mass > 0.0 { Some(mean / mass) } else { None });
        measurement_mass.push(mass);
    }
    Ok(SmcPhdOutput {
        set: PhdParticleSet::new(particles, weights)?,
        measurement_mass,
        measurement_mean,
    })
}

/// Per-measurement extraction: every `z` claiming more than `threshold`
/// expected targets yields the claim-weighted particle mean.
pub fn smc_extract(out: &SmcPhdOutput, threshold: f64) -> Vec<Vector> {
    out.measurement_mass
        .iter()
        .zip(&out.measurement_mean)
        .filter(|(m, _)| **m > threshold)
        .filter_map(|(_, x)| x.clone())
        .collect()
}

/// Resamples an intensity to `n_out` particles, preserving its total mass.
pub fn phd_resample(
    set: &PhdParticleSet,
    n_out: usize,
    scheme: ResampleScheme,
    rng: &mut RngStream,
) -> Result<PhdParticleSet> {
    let mass = set.total_mass();
    if set.is_empty() || mass <= 0.0 {
        return Ok(PhdParticleSet::empty());
    }
    let idx = resample_indices(set.weights(), n_out, scheme, rng)?;
    let particles = idx.iter().map(|&i| set.particles()[i].clone()).collect();
    PhdParticleSet::new(particles, alloc::vec![mass / n_out as f64; n_out])
}

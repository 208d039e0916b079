use alloc::vec::Vec;

use super::{GaussianMixture, PhdModelParams, PhdParticleSet};
use crate::error::{Error, Result};
use crate::gaussian::GaussianSampler;
use crate::kalman::kalman_update;
use crate::linalg::{psd_factor, CovFactor, Vector};
use crate::models::SemiLinearGaussian;
use crate::rng::RngStream;
use crate::weights::{log_sum_exp, normalize_weights};

/// Where birth particles are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BirthPlacement {
    /// From the normalized birth intensity.
    Prior,
    /// Around the current measurements: one stratum per measurement drawn
    /// from the birth intensity conditioned on that measurement, plus one
    /// prior stratum, combined by deterministic-mixture importance sampling
    /// so the weighted set stays an unbiased sample of the birth intensity.
    AroundMeasurements,
}

/// A mixture normalized to a probability law, ready to sample and evaluate.
struct MixtureLaw {
    log_weights: Vec<f64>,
    probs: Vec<f64>,
    samplers: Vec<GaussianSampler>,
    factors: Vec<Option<CovFactor>>,
    means: Vec<Vector>,
}

impl MixtureLaw {
    fn new(components: Vec<(f64, Vector, crate::linalg::Matrix)>) -> Result<Self> {
        let lw: Vec<f64> = components.iter().map(|(w, _, _)| *w).collect();
        let (probs, _) = normalize_weights(&lw)?;
        let log_weights = probs.iter().map(|p| super::ln(*p)).collect();
        let mut samplers = Vec::with_capacity(components.len());
        let mut factors = Vec::with_capacity(components.len());
        let mut means = Vec::with_capacity(components.len());
        for (_, m, c) in components {
            samplers.push(GaussianSampler::from_parts(m.clone(), psd_factor(&c)));
            factors.push(CovFactor::new(&c));
            means.push(m);
        }
        Ok(Self {
            log_weights,
            probs,
            samplers,
            factors,
            means,
        })
    }

    fn sample(&self, rng: &mut RngStream) -> Vector {
        let c = rng.categorical(&self.probs);
        self.samplers[c].sample(rng)
    }

    fn log_density(&self, x: &Vector) -> f64 {
        let terms: Vec<f64> = self
            .factors
            .iter()
            .zip(&self.log_weights)
            .zip(&self.means)
            .map(|((f, lw), m)| match f {
                Some(f) => lw + f.log_density_residual(&(x - m)),
                None => f64::NEG_INFINITY,
            })
            .collect();
        log_sum_exp(&terms)
    }
}

fn prior_law(birth: &GaussianMixture) -> Result<MixtureLaw> {
    MixtureLaw::new(
        birth
            .components()
            .iter()
            .map(|(w, b)| (super::ln(*w), b.mean().clone(), b.cov().clone()))
            .collect(),
    )
}

/// Draws the birth particles of one step.
///
/// `per_stratum` particles are drawn per stratum. With [`BirthPlacement::Prior`]
/// there is one stratum and each particle carries `|γ| / per_stratum`. With
/// [`BirthPlacement::AroundMeasurements`] there are `|Z| + 1` strata and a
/// particle `x` carries `γ(x) / (per_stratum · (γ(x)/|γ| + Σ_z q_z(x)))`,
/// where `q_z ∝ γ g(z|·)`.
pub fn sample_birth<M: SemiLinearGaussian>(
    params: &PhdModelParams<M>,
    zs: &[Vector],
    per_stratum: usize,
    placement: BirthPlacement,
    rng: &mut RngStream,
) -> Result<PhdParticleSet> {
    let birth = &params.birth;
    let mass = birth.total_weight();
    if birth.is_empty() || mass <= 0.0 || per_stratum == 0 {
        return Ok(PhdParticleSet::empty());
    }
    let prior = prior_law(birth)?;
    if placement == BirthPlacement::Prior || zs.is_empty() {
        let particles = (0..per_stratum).map(|_| prior.sample(rng)).collect();
        return PhdParticleSet::new(particles, alloc::vec![mass / per_stratum as f64; per_stratum]);
    }
    let h = params.model.obs_matrix();
    let r = params.model.obs_noise();
    let mut strata = Vec::with_capacity(zs.len() + 1);
    for z in zs {
        let mut comps = Vec::with_capacity(birth.len());
        for (w, b) in birth.components() {
            let (post, ll) = kalman_update(b, h, r, z)?;
            let (m, c) = post.into_parts();
            comps.push((super::ln(*w) + ll, m, c));
        }
        strata.push(MixtureLaw::new(comps)?);
    }
    let ln_mass = super::ln(mass);
    let ln_per = super::ln(per_stratum as f64);
    let mut particles = Vec::with_capacity(per_stratum * (zs.len() + 1));
    let mut weights = Vec::with_capacity(per_stratum * (zs.len() + 1));
    let mut terms = Vec::with_capacity(zs.len() + 1);
    for s in 0..=zs.len() {
        for _ in 0..per_stratum {
            let x = if s == 0 {
                prior.sample(rng)
            } else {
                strata[s - 1].sample(rng)
            };
            let lg = prior.log_density(&x);
            terms.clear();
            terms.push(lg);
            terms.extend(strata.iter().map(|q| q.log_density(&x)));
            let lw = ln_mass + lg - ln_per - log_sum_exp(&terms);
            let w = crate::phd::exp(lw);
            if !w.is_finite() {
                return Err(Error::NonFiniteWeight(lw));
            }
            particles.push(x);
            weights.push(w);
        }
    }
    PhdParticleSet::new(particles, weights)
}

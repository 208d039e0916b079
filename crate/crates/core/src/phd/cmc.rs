use alloc::vec::Vec;

use super::{exp, ln, PhdModelParams, PhdParticleSet};
use crate::error::{Error, Result};
use crate::filter::conditional;
use crate::linalg::Vector;
use crate::models::{MomentFunction, SemiLinearGaussian};
use crate::resample::{resample_indices, ResampleScheme};
use crate::rng::RngStream;
use crate::weights::log_sum_exp;

/// Weight tables of the four-term decomposition of the updated PHD:
/// undetected persistent (`w1`), undetected birth (`w2`), detected
/// persistent (`w3`) and detected birth (`w4`).
#[derive(Debug, Clone, Default)]
pub struct WeightTables {
    /// `(1 − p_d) p_s(xⁱ) wⁱ`, one per persistent particle.
    pub w1: Vec<f64>,
    /// `(1 − p_d) w_γʲ`, one per birth particle.
    pub w2: Vec<f64>,
    /// `w3[z][i] = p_d p_s(xⁱ) p(z|xⁱ) wⁱ / B̃(z)`.
    pub w3: Vec<Vec<f64>>,
    /// `w4[z][j] = p_d g(z|x_γʲ) w_γʲ / B̃(z)`.
    pub w4: Vec<Vec<f64>>,
    /// `log B̃(z)`.
    pub log_b: Vec<f64>,
    /// `κ(z)`.
    pub clutter: Vec<f64>,
    /// `Σᵢ w3[z][i]` and `Σᵢ w3[z][i] E[x | xⁱ, z]`.
    pub persistent_mass: Vec<f64>,
    pub persistent_moment: Vec<Vector>,
    /// `Σⱼ w4[z][j]` and `Σⱼ w4[z][j] x_γʲ`.
    pub birth_mass: Vec<f64>,
    pub birth_moment: Vec<Vector>,
}

impl WeightTables {
    /// `Ñ = Σ w1 + Σ w2 + ΣΣ w3 + ΣΣ w4`.
    pub fn count(&self) -> f64 {
        self.w1.iter().sum::<f64>()
            + self.w2.iter().sum::<f64>()
            + self.persistent_mass.iter().sum::<f64>()
            + self.birth_mass.iter().sum::<f64>()
    }
}

/// State carried between conditional-PHD steps.
#[derive(Debug, Clone, Default)]
pub struct CmcPhdState {
    /// Particle approximation of the intensity at `n − 1`.
    pub persistent: PhdParticleSet,
    /// Birth particles used at the last step.
    pub birth: PhdParticleSet,
    pub last_tables: Option<WeightTables>,
}

impl CmcPhdState {
    pub fn new(persistent: PhdParticleSet) -> Self {
        Self {
            persistent,
            birth: PhdParticleSet::empty(),
            last_tables: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CmcPhdOutput {
    pub state: CmcPhdState,
    pub count: f64,
    /// `∫ f vₙ`: conditional expectations for the persistent terms, birth
    /// samples for the birth terms.
    pub moment: Option<Vector>,
}

/// How the next particle cloud is sized and resampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CmcCloud {
    pub per_target: usize,
    pub scheme: ResampleScheme,
    /// Resample the missed-detection draws as their own pool, sized
    /// `per_target · round(predicted count)`, so that an undetected target
    /// keeps a full cloud instead of a `1 − p_d` share of one.
    pub split_missed: bool,
}

impl CmcCloud {
    pub fn new(per_target: usize, scheme: ResampleScheme) -> Self {
        Self {
            per_target,
            scheme,
            split_missed: false,
        }
    }

    pub fn split_missed(mut self, on: bool) -> Self {
        self.split_missed = on;
        self
    }
}

/// Conditional Monte Carlo PHD step.
///
/// `birth` holds this step's birth particles. With `closed_form_birth` the
/// birth share of `B̃(z)` uses the exact `B²(z)` of the Gaussian-mixture birth
/// intensity instead of its particle estimate.
///
/// The next cloud has one particle per persistent particle, drawn from the
/// per-particle mixture `qⁱ ∝ w1ⁱ f(·|xⁱ) + Σ_z w3ⁱ(z) p(·|xⁱ, z)` with weight
/// `w1ⁱ + Σ_z w3ⁱ(z)`, plus the birth particles with weight
/// `w2ʲ + Σ_z w4ʲ(z)`; the union is then resampled to
/// `per_target · max(1, round(Ñ))` particles. With
/// [`CmcCloud::split_missed`] the draws from `f(·|xⁱ)` are resampled
/// separately from the rest, each pool keeping its own mass.
#[allow(clippy::too_many_arguments)]
pub fn cmc_phd_step<M: SemiLinearGaussian>(
    state: &CmcPhdState,
    birth: PhdParticleSet,
    params: &PhdModelParams<M>,
    zs: &[Vector],
    closed_form_birth: bool,
    f: Option<&dyn MomentFunction>,
    cloud: CmcCloud,
    rng: &mut RngStream,
) -> Result<CmcPhdOutput> {
    params.validate()?;
    let model = &params.model;
    let h = model.obs_matrix();
    let p = model.state_dim();
    let pd = params.p_d;
    let ln_pd = ln(pd);
    let xs = state.persistent.particles();
    let ws = state.persistent.weights();
    let n = xs.len();

    // Per persistent particle: log(p_s w), the drift, and the kernel gain.
    let mut ln_sw = Vec::with_capacity(n);
    let mut drifts = Vec::with_capacity(n);
    let mut gains = Vec::with_capacity(n);
    for (x, w) in xs.iter().zip(ws) {
        ln_sw.push(ln(params.survival.prob(x)) + ln(*w));
        drifts.push(model.drift(x));
        gains.push(model.kernel_gain(x)?);
    }
    let pred_obs: Vec<Vector> = drifts.iter().map(|d| h * d).collect();

    // log p(z|xⁱ) for every (z, i).
    let ln_pred: Vec<Vec<f64>> = zs
        .iter()
        .map(|z| {
            pred_obs
                .iter()
                .zip(&gains)
                .map(|(hf, g)| g.pred.log_density_residual(&(z - hf)))
                .collect()
        })
        .collect();
    let ln_g_birth: Vec<Vec<f64>> = zs
        .iter()
        .map(|z| {
            birth
                .particles()
                .iter()
                .map(|x| crate::models::StateSpaceModel::obs_logdensity(model, z, x))
                .collect()
        })
        .collect();
    let ln_wb: Vec<f64> = birth.weights().iter().map(|w| ln(*w)).collect();

    let mut tables = WeightTables {
        w1: ln_sw.iter().map(|l| (1.0 - pd) * exp(*l)).collect(),
        w2: birth.weights().iter().map(|w| (1.0 - pd) * w).collect(),
        ..WeightTables::default()
    };

    for (zi, z) in zs.iter().enumerate() {
        let kappa = params.clutter.intensity(z);
        let persistent_terms: Vec<f64> = ln_pred[zi]
            .iter()
            .zip(&ln_sw)
            .map(|(lp, lsw)| ln_pd + lp + lsw)
            .collect();
        let birth_terms: Vec<f64> = ln_g_birth[zi]
            .iter()
            .zip(&ln_wb)
            .map(|(lg, lw)| ln_pd + lg + lw)
            .collect();
        let ln_birth_share = if closed_form_birth && !params.birth.is_empty() {
            params.log_birth_evidence(z)?
        } else {
            log_sum_exp(&birth_terms)
        };
        let log_b = log_sum_exp(&[ln(kappa), ln_birth_share, log_sum_exp(&persistent_terms)]);
        if !log_b.is_finite() {
            return Err(Error::VanishingNormalizer(zi));
        }
        let w3: Vec<f64> = persistent_terms.iter().map(|l| exp(l - log_b)).collect();
        let w4: Vec<f64> = birth_terms.iter().map(|l| exp(l - log_b)).collect();

        let mut pm = 0.0;
        let mut pmom = Vector::zeros(p);
        for (i, w) in w3.iter().enumerate() {
            if *w > 0.0 {
                let mean = &drifts[i] + &gains[i].gain * (z - &pred_obs[i]);
                pm += w;
                pmom += mean * *w;
            }
        }
        let mut bm = 0.0;
        let mut bmom = Vector::zeros(p);
        for (j, w) in w4.iter().enumerate() {
            if *w > 0.0 {
                bm += w;
                bmom += &birth.particles()[j] * *w;
            }
        }
        tables.w3.push(w3);
        tables.w4.push(w4);
        tables.log_b.push(log_b);
        tables.clutter.push(kappa);
        tables.persistent_mass.push(pm);
        tables.persistent_moment.push(pmom);
        tables.birth_mass.push(bm);
        tables.birth_moment.push(bmom);
    }
    let count = tables.count();

    let moment = match f {
        None => None,
        Some(f) => Some(region_moment(
            f, model, xs, &tables, &drifts, &gains, &pred_obs, zs, &birth,
        )?),
    };

    // Next cloud from the per-particle mixtures.
    let mut missed = (Vec::new(), Vec::new());
    let mut detected = (Vec::with_capacity(n + birth.len()), Vec::with_capacity(n + birth.len()));
    let mut comp = alloc::vec![0.0; zs.len() + 1];
    let draw = |c: usize, i: usize, rng: &mut RngStream| -> Vector {
        let g = &gains[i];
        let (mean, factor) = if c == 0 {
            (drifts[i].clone(), model.noise_factor(&xs[i]))
        } else {
            (&drifts[i] + &g.gain * (&zs[c - 1] - &pred_obs[i]), g.cov_factor.clone())
        };
        mean + &factor * rng.standard_normal_vector(factor.ncols())
    };
    for i in 0..n {
        comp[0] = tables.w1[i];
        for (zi, slot) in comp[1..].iter_mut().enumerate() {
            *slot = tables.w3[zi][i];
        }
        if cloud.split_missed {
            // One draw per branch, each with its own mass.
            if comp[0] > 0.0 {
                missed.0.push(draw(0, i, rng));
                missed.1.push(comp[0]);
            }
            let det: f64 = comp[1..].iter().sum();
            if det > 0.0 {
                let c = 1 + rng.categorical(&comp[1..]);
                detected.0.push(draw(c, i, rng));
                detected.1.push(det);
            }
            continue;
        }
        let mass: f64 = comp.iter().sum();
        if mass <= 0.0 {
            continue;
        }
        let c = rng.categorical(&comp);
        detected.0.push(draw(c, i, rng));
        detected.1.push(mass);
    }
    for (j, x) in birth.particles().iter().enumerate() {
        let mass = tables.w2[j] + tables.w4.iter().map(|row| row[j]).sum::<f64>();
        if mass > 0.0 {
            detected.0.push(x.clone());
            detected.1.push(mass);
        }
    }
    let mut persistent = resample_pool(detected, 1.0, cloud, rng)?;
    if cloud.split_missed {
        // The missed pool carries (1 − p_d) of the predicted mass.
        let m = thin_pool(missed, 1.0 - pd, cloud, rng)?;
        persistent = PhdParticleSet::new(
            persistent.particles().iter().chain(m.particles()).cloned().collect(),
            persistent.weights().iter().chain(m.weights()).copied().collect(),
        )?;
    }
    Ok(CmcPhdOutput {
        state: CmcPhdState {
            persistent,
            birth,
            last_tables: Some(tables),
        },
        count,
        moment,
    })
}

/// Resamples a weighted pool to `per_target · max(1, round(mass / unit))`
/// equally weighted particles of the same total mass.
fn resample_pool(
    (particles, weights): (Vec<Vector>, Vec<f64>),
    unit: f64,
    cloud: CmcCloud,
    rng: &mut RngStream,
) -> Result<PhdParticleSet> {
    let total: f64 = weights.iter().sum();
    if particles.is_empty() || total <= 0.0 {
        return Ok(PhdParticleSet::empty());
    }
    let budget = cloud.per_target.max(1) * (libm_round(total / unit) as usize).max(1);
    let idx = resample_indices(&weights, budget, cloud.scheme, rng)?;
    PhdParticleSet::new(
        idx.iter().map(|&i| particles[i].clone()).collect(),
        alloc::vec![total / budget as f64; budget],
    )
}

/// Keeps `per_target · max(1, round(mass / unit))` particles of a pool,
/// chosen uniformly rather than by weight, with weights scaled by
/// `len / kept`. A target missed several times in a row keeps a usable
/// cloud even though its mass shrinks geometrically. The pick is always
/// systematic, so every stretch of the pool keeps its share.
fn thin_pool(
    (particles, weights): (Vec<Vector>, Vec<f64>),
    unit: f64,
    cloud: CmcCloud,
    rng: &mut RngStream,
) -> Result<PhdParticleSet> {
    let total: f64 = weights.iter().sum();
    if particles.is_empty() || total <= 0.0 {
        return Ok(PhdParticleSet::empty());
    }
    let budget = cloud.per_target.max(1) * (libm_round(total / unit) as usize).max(1);
    if budget >= particles.len() {
        return PhdParticleSet::new(particles, weights);
    }
    let flat = alloc::vec![1.0; particles.len()];
    let idx = resample_indices(&flat, budget, ResampleScheme::Systematic, rng)?;
    let scale = particles.len() as f64 / budget as f64;
    PhdParticleSet::new(
        idx.iter().map(|&i| particles[i].clone()).collect(),
        idx.iter().map(|&i| weights[i] * scale).collect(),
    )
}

fn libm_round(x: f64) -> f64 {
    num_traits::Float::round(x)
}

#[allow(clippy::too_many_arguments)]
fn region_moment<M: SemiLinearGaussian>(
    f: &dyn MomentFunction,
    model: &M,
    xs: &[Vector],
    tables: &WeightTables,
    drifts: &[Vector],
    gains: &[alloc::borrow::Cow<'_, crate::models::KernelGain>],
    pred_obs: &[Vector],
    zs: &[Vector],
    birth: &PhdParticleSet,
) -> Result<Vector> {
    let mut acc = Vector::zeros(f.dim());
    for (i, w) in tables.w1.iter().enumerate() {
        if *w > 0.0 {
            let k = model.noise_factor(&xs[i]);
            let q = &k * k.transpose();
            acc += conditional(f, &drifts[i], &q)? * *w;
        }
    }
    for (zi, z) in zs.iter().enumerate() {
        for (i, w) in tables.w3[zi].iter().enumerate() {
            if *w > 0.0 {
                let mean = &drifts[i] + &gains[i].gain * (z - &pred_obs[i]);
                acc += conditional(f, &mean, &gains[i].cov)? * *w;
            }
        }
    }
    for (j, x) in birth.particles().iter().enumerate() {
        let w = tables.w2[j] + tables.w4.iter().map(|row| row[j]).sum::<f64>();
        if w > 0.0 {
            acc += f.eval(x) * w;
        }
    }
    Ok(acc)
}

/// Crude counterpart of the count `Ñ` under the same `B̃(z)`: each persistent
/// particle is moved once through the transition and the detected-persistent
/// term uses `g(z|x̃ⁱ)` in place of `p(z|xⁱ)`. Birth terms are already sampled
/// and enter unchanged. Its expectation over the transition draws is `Ñ`.
pub fn crude_phd_count<M: SemiLinearGaussian>(
    state: &CmcPhdState,
    tables: &WeightTables,
    params: &PhdModelParams<M>,
    zs: &[Vector],
    rng: &mut RngStream,
) -> Result<f64> {
    let model = &params.model;
    let ln_pd = ln(params.p_d);
    let mut total = tables.w2.iter().sum::<f64>() + tables.birth_mass.iter().sum::<f64>();
    for (x, w) in state.persistent.particles().iter().zip(state.persistent.weights()) {
        let ln_sw = ln(params.survival.prob(x)) + ln(*w);
        let moved = crate::models::StateSpaceModel::sample_transition(model, x, rng);
        total += (1.0 - params.p_d) * exp(ln_sw);
        for (z, lb) in zs.iter().zip(&tables.log_b) {
            let lg = crate::models::StateSpaceModel::obs_logdensity(model, z, &moved);
            total += exp(ln_pd + lg + ln_sw - lb);
        }
    }
    Ok(total)
}

/// Targets extracted from the last step's tables: every measurement whose
/// detected-persistent or detected-birth mass exceeds `threshold` yields the
/// corresponding weighted mean. A measurement may yield from both.
pub fn extract_targets(state: &CmcPhdState, threshold: f64) -> Vec<(Vector, TargetSource)> {
    let mut out = Vec::new();
    let Some(t) = &state.last_tables else {
        return out;
    };
    for zi in 0..t.persistent_mass.len() {
        if t.persistent_mass[zi] > threshold {
            out.push((
                &t.persistent_moment[zi] / t.persistent_mass[zi],
                TargetSource::Persistent,
            ));
        }
        if t.birth_mass[zi] > threshold {
            out.push((&t.birth_moment[zi] / t.birth_mass[zi], TargetSource::Birth));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetSource {
    Persistent,
    Birth,
}

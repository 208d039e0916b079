use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::models::{LocalKernel, MomentFunction, OptimalKernel, SemiLinearGaussian, SemiLinearJmss, StateSpaceModel};
use crate::resample::{resample_indices, ResamplePolicy};
use crate::rng::RngStream;
use crate::weights::{ess, log_sum_exp, normalize_weights};

/// A particle of the joint `(xₙ, rₙ)` process.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridParticle {
    pub weight: f64,
    pub mode: usize,
    pub state: Vector,
}

impl HybridParticle {
    /// `n` equally weighted draws from the initial state and mode laws.
    pub fn from_prior<M: SemiLinearGaussian>(
        model: &SemiLinearJmss<M>,
        n: usize,
        rng: &mut RngStream,
    ) -> Vec<Self> {
        let sampler = model.initial().sampler();
        (0..n)
            .map(|_| HybridParticle {
                weight: 1.0 / n as f64,
                mode: model.chain().sample_initial(rng),
                state: sampler.sample(rng),
            })
            .collect()
    }
}

/// `w̄ⁱ(r) ∝ wⁱ p(r|rₙ₋₁ⁱ) p(yₙ|xₙ₋₁ⁱ, r)`, normalized over all `(i, r)` so
/// that row `i` sums to the particle weight `w̃ⁱ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeMarginalWeights {
    n_modes: usize,
    data: Vec<f64>,
}

impl ModeMarginalWeights {
    pub fn n_particles(&self) -> usize {
        self.data.len() / self.n_modes
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn get(&self, i: usize, r: usize) -> f64 {
        self.data[i * self.n_modes + r]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_modes..(i + 1) * self.n_modes]
    }

    /// `w̃ⁱ = Σ_r w̄ⁱ(r)`.
    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).iter().sum()
    }

    pub fn particle_weights(&self) -> Vec<f64> {
        (0..self.n_particles()).map(|i| self.row_sum(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JmssEstimator {
    /// `Σ w̃ⁱ φ(xₙⁱ)` with `(rₙⁱ, xₙⁱ)` drawn from the optimal pair kernel.
    Crude,
    /// `Σ w̃ⁱ E[φ | xₙ₋₁ⁱ, yₙ, rₙⁱ]` with only `rₙⁱ` drawn.
    CmcXn,
    /// `Σᵢ Σ_r w̄ⁱ(r) E[φ | xₙ₋₁ⁱ, yₙ, r]`, nothing drawn.
    CmcXnRn,
}

#[derive(Debug, Clone)]
pub struct GeneralJmssOutput {
    pub particles: Vec<HybridParticle>,
    pub crude: Vector,
    pub cmc_xn: Vector,
    pub cmc_xn_rn: Vector,
    pub mode_weights: ModeMarginalWeights,
    pub ess: f64,
    pub log_normalizer: f64,
    pub resampled: bool,
}

impl GeneralJmssOutput {
    pub fn estimate(&self, which: JmssEstimator) -> &Vector {
        match which {
            JmssEstimator::Crude => &self.crude,
            JmssEstimator::CmcXn => &self.cmc_xn,
            JmssEstimator::CmcXnRn => &self.cmc_xn_rn,
        }
    }
}

fn apply_policy(
    mut particles: Vec<HybridParticle>,
    policy: &ResamplePolicy,
    rng: &mut RngStream,
) -> Result<(Vec<HybridParticle>, f64, bool)> {
    let w: Vec<f64> = particles.iter().map(|p| p.weight).collect();
    let e = ess(&w)?;
    let n = particles.len();
    if policy.should_resample(e, n) {
        let idx = resample_indices(&w, n, policy.scheme, rng)?;
        particles = idx
            .into_iter()
            .map(|i| HybridParticle {
                weight: 1.0 / n as f64,
                ..particles[i].clone()
            })
            .collect();
        return Ok((particles, e, true));
    }
    Ok((particles, e, false))
}

/// One step of the optimal-kernel filter for a jump system with semi-linear
/// modes, returning all three estimators from the same draws.
///
/// The draws are `rₙⁱ ~ w̄ⁱ(·)/w̃ⁱ` then `xₙⁱ ~ p(xₙ|xₙ₋₁ⁱ, yₙ, rₙⁱ)`, in
/// particle order; both sampled estimators use them and the particles are
/// advanced with them.
pub fn general_jmss_step_all<M, F>(
    particles: &[HybridParticle],
    model: &SemiLinearJmss<M>,
    y: &Vector,
    phi: &F,
    policy: &ResamplePolicy,
    rng: &mut RngStream,
) -> Result<GeneralJmssOutput>
where
    M: SemiLinearGaussian,
    F: MomentFunction + ?Sized,
{
    if particles.is_empty() {
        return Err(Error::Empty);
    }
    let k = model.n_modes();
    let mut kernels: Vec<LocalKernel> = Vec::with_capacity(particles.len() * k);
    let mut logw = Vec::with_capacity(particles.len() * k);
    for p in particles {
        for r in 0..k {
            let kr = model.mode(r).local_kernel(&p.state, y)?;
            logw.push(p.weight.ln() + model.chain().prob(p.mode, r).ln() + kr.log_pred);
            kernels.push(kr);
        }
    }
    let (wbar, log_normalizer) = normalize_weights(&logw)?;
    let mode_weights = ModeMarginalWeights {
        n_modes: k,
        data: wbar,
    };
    let moments: Vec<Vector> = kernels
        .iter()
        .map(|kr| phi.conditional(&kr.mean, &kr.cov).ok_or(Error::NoClosedForm))
        .collect::<Result<_>>()?;

    let mut cmc_xn_rn = Vector::zeros(phi.dim());
    for (w, m) in mode_weights.data.iter().zip(&moments) {
        cmc_xn_rn += m * *w;
    }

    let mut cmc_xn = Vector::zeros(phi.dim());
    let mut crude = Vector::zeros(phi.dim());
    let mut next = Vec::with_capacity(particles.len());
    for i in 0..particles.len() {
        let row = mode_weights.row(i);
        let wt: f64 = row.iter().sum();
        let r = rng.categorical(row);
        let x = kernels[i * k + r].sample(rng);
        cmc_xn += &moments[i * k + r] * wt;
        crude += phi.eval(&x) * wt;
        next.push(HybridParticle {
            weight: wt,
            mode: r,
            state: x,
        });
    }
    let (particles, e, resampled) = apply_policy(next, policy, rng)?;
    Ok(GeneralJmssOutput {
        particles,
        crude,
        cmc_xn,
        cmc_xn_rn,
        mode_weights,
        ess: e,
        log_normalizer,
        resampled,
    })
}

/// [`general_jmss_step_all`] reduced to the selected estimator.
pub fn general_jmss_step<M, F>(
    particles: &[HybridParticle],
    model: &SemiLinearJmss<M>,
    y: &Vector,
    phi: &F,
    estimator: JmssEstimator,
    policy: &ResamplePolicy,
    rng: &mut RngStream,
) -> Result<(Vec<HybridParticle>, Vector)>
where
    M: SemiLinearGaussian,
    F: MomentFunction + ?Sized,
{
    let out = general_jmss_step_all(particles, model, y, phi, policy, rng)?;
    let est = out.estimate(estimator).clone();
    Ok((out.particles, est))
}

/// Factored importance distribution `q(r | xₙ₋₁, rₙ₋₁) q(x | xₙ₋₁, r, rₙ₋₁)`.
pub trait JumpProposal: Send + Sync {
    fn mode_probs(&self, x_prev: &Vector, r_prev: usize, y: &Vector) -> Result<Vec<f64>>;
    fn sample_state(
        &self,
        x_prev: &Vector,
        r: usize,
        r_prev: usize,
        y: &Vector,
        rng: &mut RngStream,
    ) -> Result<Vector>;
    fn state_log_density(&self, x: &Vector, x_prev: &Vector, r: usize, r_prev: usize, y: &Vector) -> f64;
}

/// Prior mode chain and per-mode prior transitions.
pub struct TransitionJumpProposal<'a, M>(pub &'a SemiLinearJmss<M>);

impl<M: SemiLinearGaussian> JumpProposal for TransitionJumpProposal<'_, M> {
    fn mode_probs(&self, _x_prev: &Vector, r_prev: usize, _y: &Vector) -> Result<Vec<f64>> {
        Ok(self.0.chain().row(r_prev).to_vec())
    }

    fn sample_state(
        &self,
        x_prev: &Vector,
        r: usize,
        _r_prev: usize,
        _y: &Vector,
        rng: &mut RngStream,
    ) -> Result<Vector> {
        Ok(self.0.mode(r).sample_transition(x_prev, rng))
    }

    fn state_log_density(&self, x: &Vector, x_prev: &Vector, r: usize, _r_prev: usize, _y: &Vector) -> f64 {
        self.0.mode(r).transition_logdensity(x, x_prev)
    }
}

/// Exact mode posterior `p(r | xₙ₋₁, rₙ₋₁, yₙ)` and per-mode optimal
/// kernels. Makes the mixture-proposal weights constant in `x`.
pub struct OptimalJumpProposal<'a, M>(pub &'a SemiLinearJmss<M>);

impl<M: SemiLinearGaussian> JumpProposal for OptimalJumpProposal<'_, M> {
    fn mode_probs(&self, x_prev: &Vector, r_prev: usize, y: &Vector) -> Result<Vec<f64>> {
        let lw: Vec<f64> = (0..self.0.n_modes())
            .map(|r| {
                Ok(self.0.chain().prob(r_prev, r).ln() + self.0.mode(r).predictive_loglik(x_prev, y)?)
            })
            .collect::<Result<_>>()?;
        Ok(normalize_weights(&lw)?.0)
    }

    fn sample_state(
        &self,
        x_prev: &Vector,
        r: usize,
        _r_prev: usize,
        y: &Vector,
        rng: &mut RngStream,
    ) -> Result<Vector> {
        Ok(self.0.mode(r).local_kernel(x_prev, y)?.sample(rng))
    }

    fn state_log_density(&self, x: &Vector, x_prev: &Vector, r: usize, _r_prev: usize, y: &Vector) -> f64 {
        match self.0.mode(r).local_kernel(x_prev, y) {
            Ok(k) => k.log_density(x),
            Err(_) => f64::NEG_INFINITY,
        }
    }
}

fn log_joint<M: SemiLinearGaussian>(
    model: &SemiLinearJmss<M>,
    x: &Vector,
    x_prev: &Vector,
    r: usize,
    r_prev: usize,
    y: &Vector,
) -> f64 {
    let m = model.mode(r);
    model.chain().prob(r_prev, r).ln() + m.transition_logdensity(x, x_prev) + m.obs_logdensity(y, x)
}

/// Importance sampling over `(i, r)` without sampling modes: one proposal per
/// particle and mode, estimate = ratio of the weighted sums. Each particle
/// then keeps one of its `K` candidates, drawn in proportion to their weights,
/// with the candidates' total weight.
pub fn jmss_is_marginal_step<M, F, Q>(
    particles: &[HybridParticle],
    model: &SemiLinearJmss<M>,
    y: &Vector,
    phi: &F,
    proposal: &Q,
    policy: &ResamplePolicy,
    rng: &mut RngStream,
) -> Result<(Vec<HybridParticle>, Vector)>
where
    M: SemiLinearGaussian,
    F: MomentFunction + ?Sized,
    Q: JumpProposal + ?Sized,
{
    if particles.is_empty() {
        return Err(Error::Empty);
    }
    let k = model.n_modes();
    let mut states = Vec::with_capacity(particles.len() * k);
    let mut logw = Vec::with_capacity(particles.len() * k);
    for p in particles {
        for r in 0..k {
            let x = proposal.sample_state(&p.state, r, p.mode, y, rng)?;
            let lq = proposal.state_log_density(&x, &p.state, r, p.mode, y);
            logw.push(p.weight.ln() + log_joint(model, &x, &p.state, r, p.mode, y) - lq);
            states.push(x);
        }
    }
    let (w, _) = normalize_weights(&logw).map_err(|e| match e {
        Error::DegenerateWeights => Error::ZeroDenominator,
        other => other,
    })?;
    let mut est = Vector::zeros(phi.dim());
    for (wi, x) in w.iter().zip(&states) {
        if *wi > 0.0 {
            est += phi.eval(x) * *wi;
        }
    }
    let mut next = Vec::with_capacity(particles.len());
    for i in 0..particles.len() {
        let row = &w[i * k..(i + 1) * k];
        let total: f64 = row.iter().sum();
        let r = if total > 0.0 { rng.categorical(row) } else { 0 };
        next.push(HybridParticle {
            weight: total,
            mode: r,
            state: states[i * k + r].clone(),
        });
    }
    let (next, _, _) = apply_policy(next, policy, rng)?;
    Ok((next, est))
}

/// A draw from the factored proposal with both weightings of it.
#[derive(Debug, Clone)]
pub struct MixtureDraw {
    pub modes: Vec<usize>,
    pub states: Vec<Vector>,
    /// Log of `wⁱ p(rⁱ|·) f g / (q(rⁱ) q(xⁱ|rⁱ))`.
    pub log_plain: Vec<f64>,
    /// Log of its expectation over `r` given `xⁱ`:
    /// `wⁱ Σ_r p(r|·) f_r g_r / Σ_r q(r) q(xⁱ|r)`, sums over `q(r) > 0`.
    pub log_mixture: Vec<f64>,
}

pub fn mixture_proposal_weights<M, Q>(
    particles: &[HybridParticle],
    model: &SemiLinearJmss<M>,
    y: &Vector,
    proposal: &Q,
    rng: &mut RngStream,
) -> Result<MixtureDraw>
where
    M: SemiLinearGaussian,
    Q: JumpProposal + ?Sized,
{
    let k = model.n_modes();
    let n = particles.len();
    let mut draw = MixtureDraw {
        modes: Vec::with_capacity(n),
        states: Vec::with_capacity(n),
        log_plain: Vec::with_capacity(n),
        log_mixture: Vec::with_capacity(n),
    };
    let mut num = Vec::with_capacity(k);
    let mut den = Vec::with_capacity(k);
    for p in particles {
        let qr = proposal.mode_probs(&p.state, p.mode, y)?;
        let r = rng.categorical(&qr);
        let x = proposal.sample_state(&p.state, r, p.mode, y, rng)?;
        let lw = p.weight.ln();
        num.clear();
        den.clear();
        for (s, q) in qr.iter().enumerate() {
            if *q > 0.0 {
                num.push(log_joint(model, &x, &p.state, s, p.mode, y));
                den.push(q.ln() + proposal.state_log_density(&x, &p.state, s, p.mode, y));
            }
        }
        let plain = log_joint(model, &x, &p.state, r, p.mode, y)
            - qr[r].ln()
            - proposal.state_log_density(&x, &p.state, r, p.mode, y);
        draw.log_plain.push(lw + plain);
        draw.log_mixture.push(lw + log_sum_exp(&num) - log_sum_exp(&den));
        draw.modes.push(r);
        draw.states.push(x);
    }
    Ok(draw)
}

/// Factored-proposal step with mixture-expected weights. The kept mode of
/// each particle is redrawn from `p(r | xₙ, xₙ₋₁, rₙ₋₁, yₙ)`.
pub fn jmss_mixture_proposal_step<M, F, Q>(
    particles: &[HybridParticle],
    model: &SemiLinearJmss<M>,
    y: &Vector,
    phi: &F,
    proposal: &Q,
    policy: &ResamplePolicy,
    rng: &mut RngStream,
) -> Result<(Vec<HybridParticle>, Vector)>
where
    M: SemiLinearGaussian,
    F: MomentFunction + ?Sized,
    Q: JumpProposal + ?Sized,
{
    if particles.is_empty() {
        return Err(Error::Empty);
    }
    let draw = mixture_proposal_weights(particles, model, y, proposal, rng)?;
    let (w, _) = normalize_weights(&draw.log_mixture).map_err(|e| match e {
        Error::DegenerateWeights => Error::ZeroDenominator,
        other => other,
    })?;
    let mut est = Vector::zeros(phi.dim());
    for (wi, x) in w.iter().zip(&draw.states) {
        if *wi > 0.0 {
            est += phi.eval(x) * *wi;
        }
    }
    let k = model.n_modes();
    let mut next = Vec::with_capacity(particles.len());
    let mut lp = alloc::vec![0.0; k];
    for ((p, x), wi) in particles.iter().zip(draw.states).zip(w) {
        for (r, slot) in lp.iter_mut().enumerate() {
            *slot = log_joint(model, &x, &p.state, r, p.mode, y);
        }
        let r = match normalize_weights(&lp) {
            Ok((post, _)) => rng.categorical(&post),
            Err(_) => p.mode,
        };
        next.push(HybridParticle {
            weight: wi,
            mode: r,
            state: x,
        });
    }
    let (next, _, _) = apply_policy(next, policy, rng)?;
    Ok((next, est))
}

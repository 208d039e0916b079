//! Reference posterior means for MSE.
//!
//! The scalar bootstrap works on plain `f64` slices: at `N = 10⁵` particles
//! the per-particle vector allocations of the generic filters dominate.

use seqcmc_core::{resample_indices, ResampleScheme, RngStream};

use crate::scenario::ScalarModel;

/// Stream of a run's seed reserved for the reference filter.
pub const REFERENCE_STREAM: u64 = 1_000;

/// Bootstrap filter means `Σ wⁱ f(xₙⁱ)` for `n = 1..=ys.len()`, with
/// systematic resampling at every step.
pub fn bootstrap_reference(
    model: &ScalarModel,
    ys: &[f64],
    n: usize,
    f: impl Fn(f64) -> f64,
    rng: &mut RngStream,
) -> seqcmc_core::Result<Vec<f64>> {
    let (m0, v0) = model.prior();
    let sd0 = v0.sqrt();
    let mut xs: Vec<f64> = (0..n).map(|_| m0 + sd0 * rng.standard_normal()).collect();
    let mut next = vec![0.0; n];
    let mut logw = vec![0.0; n];
    let mut out = Vec::with_capacity(ys.len());
    for &y in ys {
        for (x, lw) in xs.iter_mut().zip(logw.iter_mut()) {
            *x = propagate(model, *x, rng);
            *lw = log_lik(model, y, *x);
        }
        let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(seqcmc_core::Error::DegenerateWeights);
        }
        let mut total = 0.0;
        for lw in logw.iter_mut() {
            *lw = (*lw - max).exp();
            total += *lw;
        }
        let mean = xs.iter().zip(&logw).map(|(x, w)| f(*x) * w).sum::<f64>() / total;
        out.push(mean);
        let idx = resample_indices(&logw, n, ResampleScheme::Systematic, rng)?;
        for (dst, i) in next.iter_mut().zip(idx) {
            *dst = xs[i];
        }
        std::mem::swap(&mut xs, &mut next);
    }
    Ok(out)
}

#[inline]
fn propagate(model: &ScalarModel, x: f64, rng: &mut RngStream) -> f64 {
    match model {
        ScalarModel::Linear(m) => {
            use seqcmc_core::models::SemiLinearGaussian;
            let a = m.transition_matrix()[(0, 0)];
            let sd = m.noise_factor(&seqcmc_core::Vector::from_element(1, x))[(0, 0)];
            a * x + sd * rng.standard_normal()
        }
        ScalarModel::Arch(m) => m.state_var(x).sqrt() * rng.standard_normal(),
        ScalarModel::Sv(m) => m.phi() * x + m.sigma() * rng.standard_normal(),
    }
}

#[inline]
fn log_lik(model: &ScalarModel, y: f64, x: f64) -> f64 {
    match model {
        ScalarModel::Linear(m) => {
            use seqcmc_core::models::SemiLinearGaussian;
            let r = m.obs_noise()[(0, 0)];
            -0.5 * (y - x) * (y - x) / r
        }
        ScalarModel::Arch(m) => -0.5 * (y - x) * (y - x) / m.obs_var(),
        ScalarModel::Sv(m) => m.obs_logdensity_scalar(y, x),
    }
}

use alloc::vec::Vec;

use super::{exp, ln, GaussianMixture, PhdModelParams};
use crate::error::Result;
use crate::gaussian::GaussianBelief;
use crate::kalman::{kalman_predict_full, kalman_update};
use crate::linalg::{CovFactor, Matrix, Vector};
use crate::models::{LinearGaussianModel, SemiLinearGaussian};
use crate::weights::log_sum_exp;

/// Pruning, merging and capping thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmPhdConfig {
    pub prune: f64,
    /// Squared Mahalanobis merge radius.
    pub merge: f64,
    pub max_components: usize,
}

impl Default for GmPhdConfig {
    fn default() -> Self {
        Self {
            prune: 1e-5,
            merge: 4.0,
            max_components: 100,
        }
    }
}

/// One Gaussian-mixture PHD recursion: predict the surviving components,
/// append the birth mixture, update on `zs`, then prune, merge and cap.
///
/// A state-dependent survival probability is evaluated at component means.
pub fn gm_phd_step(
    mix: &GaussianMixture,
    params: &PhdModelParams<LinearGaussianModel>,
    zs: &[Vector],
    cfg: &GmPhdConfig,
) -> Result<GaussianMixture> {
    let updated = gm_phd_update_raw(mix, params, zs)?;
    let pruned = prune_components(updated, cfg.prune);
    let mut merged = merge_components(pruned, cfg.merge)?;
    if merged.len() > cfg.max_components {
        merged.sort_by(|a, b| b.0.total_cmp(&a.0));
        merged.truncate(cfg.max_components);
    }
    GaussianMixture::new(merged)
}

/// Predict and update without any mixture reduction.
pub fn gm_phd_update_raw(
    mix: &GaussianMixture,
    params: &PhdModelParams<LinearGaussianModel>,
    zs: &[Vector],
) -> Result<Vec<(f64, GaussianBelief)>> {
    params.validate()?;
    let model = &params.model;
    let f = model.transition_matrix();
    let q = model.transition_cov();
    let h = model.obs_matrix();
    let r = model.obs_noise();
    let pd = params.p_d;

    let mut predicted = Vec::with_capacity(mix.len() + params.birth.len());
    for (w, b) in mix.components() {
        let ps = params.survival.prob(b.mean());
        if ps * w > 0.0 {
            predicted.push((ps * w, kalman_predict_full(b, f, q)?));
        }
    }
    predicted.extend(params.birth.components().iter().cloned());

    let mut out = Vec::with_capacity(predicted.len() * (zs.len() + 1));
    if pd < 1.0 {
        out.extend(predicted.iter().map(|(w, b)| ((1.0 - pd) * w, b.clone())));
    }
    if pd > 0.0 {
        for z in zs {
            let mut posts = Vec::with_capacity(predicted.len());
            let mut logs = Vec::with_capacity(predicted.len());
            for (w, b) in &predicted {
                let (post, ll) = kalman_update(b, h, r, z)?;
                logs.push(ln(pd) + ln(*w) + ll);
                posts.push(post);
            }
            let kappa = params.clutter.intensity(z);
            let mut all = logs.clone();
            all.push(ln(kappa));
            let lc = log_sum_exp(&all);
            if !lc.is_finite() {
                continue;
            }
            for (l, post) in logs.into_iter().zip(posts) {
                out.push((exp(l - lc), post));
            }
        }
    }
    Ok(out)
}

/// Drops components with weight at or below `threshold`.
pub fn prune_components(
    components: Vec<(f64, GaussianBelief)>,
    threshold: f64,
) -> Vec<(f64, GaussianBelief)> {
    components.into_iter().filter(|(w, _)| *w > threshold).collect()
}

/// Greedy moment-matched merging. The heaviest remaining component absorbs
/// every component within squared Mahalanobis distance `radius` of its mean,
/// measured in its own covariance.
pub fn merge_components(
    mut components: Vec<(f64, GaussianBelief)>,
    radius: f64,
) -> Result<Vec<(f64, GaussianBelief)>> {
    let mut out = Vec::new();
    while !components.is_empty() {
        let lead = components
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (_, lead_b) = &components[lead];
        let lead_mean = lead_b.mean().clone();
        let members: Vec<usize> = match CovFactor::new(lead_b.cov()) {
            Some(fac) => (0..components.len())
                .filter(|&j| j == lead || fac.mahalanobis_sq(&(components[j].1.mean() - &lead_mean)) <= radius)
                .collect(),
            // A point-mass lead only absorbs exact copies of its mean.
            None => (0..components.len())
                .filter(|&j| j == lead || components[j].1.mean() == &lead_mean)
                .collect(),
        };
        let total: f64 = members.iter().map(|&j| components[j].0).sum();
        let dim = lead_mean.len();
        let mut mean = Vector::zeros(dim);
        for &j in &members {
            mean += components[j].1.mean() * components[j].0;
        }
        mean /= total;
        let mut cov = Matrix::zeros(dim, dim);
        for &j in &members {
            let (w, b) = &components[j];
            let d = b.mean() - &mean;
            cov += (b.cov() + &d * d.transpose()) * *w;
        }
        cov /= total;
        let cov = (&cov + cov.transpose()) * 0.5;
        out.push((total, GaussianBelief::from_algebra(mean, cov)?));
        // Remove members, highest index first.
        for &j in members.iter().rev() {
            components.swap_remove(j);
        }
    }
    Ok(out)
}

/// Components heavier than `threshold` each contribute `round(w)` copies of
/// their mean (at least one).
pub fn gm_extract(mix: &GaussianMixture, threshold: f64) -> Vec<Vector> {
    let mut out = Vec::new();
    for (w, b) in mix.components() {
        if *w > threshold {
            let copies = (num_traits::Float::round(*w) as usize).max(1);
            for _ in 0..copies {
                out.push(b.mean().clone());
            }
        }
    }
    out
}

//! Resampling schemes and the policy deciding when to apply them.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::weights::{WeightedParticleSet, NORMALIZED_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResampleScheme {
    /// i.i.d. draws from the weighted empirical law.
    #[default]
    Multinomial,
    /// One uniform, `n_out` evenly spaced pointers. Lower variance.
    Systematic,
}

/// Ancestor indices drawn from nonnegative weights. The weights need not sum
/// to one; only their ratios matter.
pub fn resample_indices(
    weights: &[f64],
    n_out: usize,
    scheme: ResampleScheme,
    rng: &mut RngStream,
) -> Result<Vec<usize>> {
    if n_out == 0 {
        return Err(Error::ZeroResampleCount);
    }
    if weights.is_empty() {
        return Err(Error::Empty);
    }
    if let Some(bad) = weights.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidWeight(*bad));
    }
    // A single ancestor needs no randomness; keeping the stream untouched lets
    // single-particle filters that differ only in resampling stay in lockstep.
    if weights.len() == 1 {
        return Ok(alloc::vec![0; n_out]);
    }
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in weights {
        acc += w;
        cdf.push(acc);
    }
    let total = acc;
    if total <= 0.0 {
        return Err(Error::DegenerateWeights);
    }
    let last_positive = weights.iter().rposition(|w| *w > 0.0).unwrap_or(0);
    let mut out = Vec::with_capacity(n_out);
    match scheme {
        ResampleScheme::Multinomial => {
            for _ in 0..n_out {
                let u = rng.uniform() * total;
                let k = cdf.partition_point(|c| *c <= u);
                out.push(k.min(last_positive));
            }
        }
        ResampleScheme::Systematic => {
            let step = total / n_out as f64;
            let mut u = rng.uniform() * step;
            let mut k = 0;
            for _ in 0..n_out {
                while k < last_positive && cdf[k] <= u {
                    k += 1;
                }
                out.push(k);
                u += step;
            }
        }
    }
    Ok(out)
}

/// Draws `n_out` equally weighted particles from a normalized set.
pub fn resample(
    set: &WeightedParticleSet,
    n_out: usize,
    rng: &mut RngStream,
    scheme: ResampleScheme,
) -> Result<WeightedParticleSet> {
    if !set.is_normalized() {
        let s: f64 = set.weights().iter().sum();
        if (s - 1.0).abs() > NORMALIZED_TOL {
            return Err(Error::Unnormalized(s));
        }
    }
    let idx = resample_indices(set.weights(), n_out, scheme, rng)?;
    let particles = idx.iter().map(|&i| set.particles()[i].clone()).collect();
    Ok(WeightedParticleSet::from_normalized_unchecked(
        particles,
        alloc::vec![1.0 / n_out as f64; n_out],
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResampleTrigger {
    Never,
    Always,
    /// Resample when `ess < fraction · N`.
    EssBelow(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResamplePolicy {
    pub scheme: ResampleScheme,
    pub trigger: ResampleTrigger,
}

impl Default for ResamplePolicy {
    fn default() -> Self {
        Self {
            scheme: ResampleScheme::Multinomial,
            trigger: ResampleTrigger::EssBelow(0.5),
        }
    }
}

impl ResamplePolicy {
    pub fn always(scheme: ResampleScheme) -> Self {
        Self {
            scheme,
            trigger: ResampleTrigger::Always,
        }
    }

    pub fn never() -> Self {
        Self {
            scheme: ResampleScheme::Multinomial,
            trigger: ResampleTrigger::Never,
        }
    }

    pub fn should_resample(&self, ess: f64, n: usize) -> bool {
        match self.trigger {
            ResampleTrigger::Never => false,
            ResampleTrigger::Always => true,
            ResampleTrigger::EssBelow(frac) => ess < frac * n as f64,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Vector;

    fn set(w: &[f64]) -> WeightedParticleSet {
        let p = (0..w.len()).map(|i| Vector::from_element(1, i as f64)).collect();
        WeightedParticleSet::new(p, w.to_vec()).unwrap()
    }

    #[test]
    fn point_mass_copies() {
        let mut rng = RngStream::new(1);
        for scheme in [ResampleScheme::Multinomial, ResampleScheme::Systematic] {
            let out = resample(&set(&[1.0, 0.0, 0.0]), 7, &mut rng, scheme).unwrap();
            assert_eq!(out.len(), 7);
            assert!(out.particles().iter().all(|p| p[0] == 0.0));
            assert!(out.weights().iter().all(|w| *w == 1.0 / 7.0));
        }
    }

    #[test]
    fn zero_count_is_an_error() {
        let mut rng = RngStream::new(1);
        assert_eq!(
            resample(&set(&[0.5, 0.5]), 0, &mut rng, ResampleScheme::Multinomial),
            Err(Error::ZeroResampleCount)
        );
    }

    #[test]
    fn zero_weight_never_selected() {
        let mut rng = RngStream::new(9);
        for scheme in [ResampleScheme::Multinomial, ResampleScheme::Systematic] {
            let idx = resample_indices(&[0.5, 0.0, 0.5, 0.0], 1000, scheme, &mut rng).unwrap();
            assert!(idx.iter().all(|i| *i == 0 || *i == 2));
        }
    }

    #[test]
    fn systematic_counts_are_floor_or_ceil() {
        let w = [0.2, 0.3, 0.5];
        let mut rng = RngStream::new(4);
        for _ in 0..200 {
            let idx = resample_indices(&w, 10, ResampleScheme::Systematic, &mut rng).unwrap();
            let mut c = [0usize; 3];
            idx.iter().for_each(|i| c[*i] += 1);
            for k in 0..3 {
                let e = 10.0 * w[k];
                assert!((c[k] as f64 - e).abs() < 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn policy_threshold() {
        let p = ResamplePolicy::default();
        assert!(p.should_resample(49.0, 100));
        assert!(!p.should_resample(50.0, 100));
    }
}

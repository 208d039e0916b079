//! Weight bookkeeping in the log domain.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::Vector;

/// Tolerance used when a caller claims weights are already normalized.
pub const NORMALIZED_TOL: f64 = 1e-9;

/// `log Σ exp(v)`, stable for large magnitudes. Returns `-inf` when every
/// entry is `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let s: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + s.ln()
}

/// Exponentiates and normalizes log weights. Returns the normalized weights
/// and `log Σ exp(raw)`.
pub fn normalize_weights(raw_log_weights: &[f64]) -> Result<(Vec<f64>, f64)> {
    if raw_log_weights.is_empty() {
        return Err(Error::Empty);
    }
    if let Some(bad) = raw_log_weights
        .iter()
        .find(|v| v.is_nan() || **v == f64::INFINITY)
    {
        return Err(Error::NonFiniteWeight(*bad));
    }
    let max = raw_log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::DegenerateWeights);
    }
    let mut w: Vec<f64> = raw_log_weights.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = w.iter().sum();
    for v in w.iter_mut() {
        *v /= total;
    }
    Ok((w, max + total.ln()))
}

/// Normalizes nonnegative linear-domain weights in place, returning the
/// previous total.
pub fn normalize_linear(weights: &mut [f64]) -> Result<f64> {
    if weights.is_empty() {
        return Err(Error::Empty);
    }
    if let Some(bad) = weights.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidWeight(*bad));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateWeights);
    }
    for v in weights.iter_mut() {
        *v /= total;
    }
    Ok(total)
}

/// Effective sample size `1 / Σ w²` of normalized weights.
pub fn ess(weights: &[f64]) -> Result<f64> {
    if weights.is_empty() {
        return Err(Error::Empty);
    }
    let mut sum = 0.0;
    let mut sq = 0.0;
    for &w in weights {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::InvalidWeight(w));
        }
        sum += w;
        sq += w * w;
    }
    if (sum - 1.0).abs() > NORMALIZED_TOL {
        return Err(Error::Unnormalized(sum));
    }
    // Rounding can nudge the value a hair outside [1, N].
    Ok((1.0 / sq).clamp(1.0, weights.len() as f64))
}

/// A cloud of particles with nonnegative weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedParticleSet {
    particles: Vec<Vector>,
    weights: Vec<f64>,
    normalized: bool,
}

impl WeightedParticleSet {
    pub fn new(particles: Vec<Vector>, weights: Vec<f64>) -> Result<Self> {
        if particles.is_empty() {
            return Err(Error::Empty);
        }
        if particles.len() != weights.len() {
            return Err(Error::LengthMismatch {
                particles: particles.len(),
                weights: weights.len(),
            });
        }
        if let Some(bad) = weights.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidWeight(*bad));
        }
        let dim = particles[0].len();
        if let Some(p) = particles.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                what: "particle",
                expected: dim,
                found: p.len(),
            });
        }
        let sum: f64 = weights.iter().sum();
        let normalized = (sum - 1.0).abs() <= NORMALIZED_TOL;
        Ok(Self {
            particles,
            weights,
            normalized,
        })
    }

    pub fn uniform(particles: Vec<Vector>) -> Result<Self> {
        let n = particles.len().max(1);
        Self::new(particles, alloc::vec![1.0 / n as f64; n])
    }

    pub fn from_log_weights(particles: Vec<Vector>, log_weights: &[f64]) -> Result<Self> {
        let (w, _) = normalize_weights(log_weights)?;
        Self::new(particles, w)
    }

    /// Constructor for code paths that produced normalized weights themselves.
    pub(crate) fn from_normalized_unchecked(particles: Vec<Vector>, weights: Vec<f64>) -> Self {
        debug_assert_eq!(particles.len(), weights.len());
        Self {
            particles,
            weights,
            normalized: true,
        }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.particles[0].len()
    }

    pub fn particles(&self) -> &[Vector] {
        &self.particles
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn ess(&self) -> Result<f64> {
        ess(&self.weights)
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    /// `Σ wᵢ f(xᵢ)`.
    pub fn weighted_sum<F>(&self, mut f: F) -> Vector
    where
        F: FnMut(&Vector) -> Vector,
    {
        let mut acc: Option<Vector> = None;
        for (x, w) in self.particles.iter().zip(&self.weights) {
            let v = f(x) * *w;
            match acc.as_mut() {
                Some(a) => *a += v,
                None => acc = Some(v),
            }
        }
        acc.expect("particle sets are nonempty")
    }

    pub fn into_parts(self) -> (Vec<Vector>, Vec<f64>) {
        (self.particles, self.weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn symmetric_pair() {
        let (w, _) = normalize_weights(&[2f64.ln(), 2f64.ln()]).unwrap();
        assert_eq!(w, alloc::vec![0.5, 0.5]);
    }

    #[test]
    fn negative_infinity_is_excluded() {
        let (w, lz) = normalize_weights(&[f64::NEG_INFINITY, 0.0]).unwrap();
        assert_eq!(w, alloc::vec![0.0, 1.0]);
        assert_eq!(lz, 0.0);
    }

    #[test]
    fn large_negative_logs_do_not_underflow() {
        let (w, lz) = normalize_weights(&[-1000.0, -1001.0]).unwrap();
        // e / (1 + e) evaluated in extended precision.
        assert!((w[0] - 0.731_058_578_630_004_9).abs() < 1e-15);
        assert!((w[1] - 0.268_941_421_369_995_1).abs() < 1e-15);
        assert!((lz - (-1000.0 + (1.0 + (-1f64).exp()).ln())).abs() < 1e-12);
    }

    #[test]
    fn all_negative_infinity_is_degenerate() {
        assert_eq!(
            normalize_weights(&[f64::NEG_INFINITY; 3]),
            Err(Error::DegenerateWeights)
        );
    }

    #[test]
    fn ess_examples() {
        assert_eq!(ess(&[0.25; 4]).unwrap(), 4.0);
        assert_eq!(ess(&[1.0, 0.0, 0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(ess(&[0.5, 0.5, 0.0, 0.0]).unwrap(), 2.0);
        assert!(matches!(ess(&[0.5, 0.6]), Err(Error::Unnormalized(_))));
    }

    #[test]
    fn set_rejects_bad_input() {
        let p = alloc::vec![Vector::zeros(1)];
        assert!(WeightedParticleSet::new(p.clone(), alloc::vec![]).is_err());
        assert!(WeightedParticleSet::new(p.clone(), alloc::vec![-1.0]).is_err());
        assert!(WeightedParticleSet::new(p, alloc::vec![f64::NAN]).is_err());
        assert!(WeightedParticleSet::new(alloc::vec![], alloc::vec![]).is_err());
    }

    proptest! {
        #[test]
        fn normalized_weights_sum_to_one(raw in prop::collection::vec(-800.0f64..800.0, 1..200)) {
            let (w, lz) = normalize_weights(&raw).unwrap();
            let s: f64 = w.iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            prop_assert!((lz - log_sum_exp(&raw)).abs() < 1e-12 * lz.abs().max(1.0));
        }

        #[test]
        fn shift_invariance(raw in prop::collection::vec(-50.0f64..50.0, 1..100), c in -500.0f64..500.0) {
            let (a, _) = normalize_weights(&raw).unwrap();
            let shifted: Vec<f64> = raw.iter().map(|v| v + c).collect();
            let (b, _) = normalize_weights(&shifted).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn ess_in_range(raw in prop::collection::vec(-20.0f64..20.0, 1..100)) {
            let (w, _) = normalize_weights(&raw).unwrap();
            let e = ess(&w).unwrap();
            prop_assert!(e >= 1.0 && e <= w.len() as f64);
        }

        #[test]
        fn ess_equals_n_iff_uniform(n in 1usize..50, bump in 0usize..50, eps in 0.01f64..2.0) {
            let mut raw = alloc::vec![0.0; n];
            let uniform = ess(&normalize_weights(&raw).unwrap().0).unwrap();
            prop_assert!((uniform - n as f64).abs() < 1e-9);
            if n > 1 {
                raw[bump % n] = eps;
                let e = ess(&normalize_weights(&raw).unwrap().0).unwrap();
                prop_assert!(e < n as f64 - 1e-9);
            }
        }
    }
}

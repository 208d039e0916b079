//! Multi-target filtering with probability hypothesis densities.
//!
//! A PHD is an intensity, not a density: its total mass is the expected
//! number of targets. All three implementations here share [`PhdModelParams`]
//! and a Gaussian-mixture birth intensity.

mod birth;
mod cmc;
mod gm;
mod ospa;
mod smc;

pub use birth::{sample_birth, BirthPlacement};
pub use cmc::{cmc_phd_step, crude_phd_count, extract_targets, CmcCloud, CmcPhdOutput, CmcPhdState, TargetSource, WeightTables};
pub use gm::{gm_extract, gm_phd_step, gm_phd_update_raw, merge_components, prune_components, GmPhdConfig};
pub use ospa::{hungarian, ospa, ospa_brute_force, OspaParams};
pub use smc::{phd_resample, smc_extract, smc_phd_step, SmcPhdOutput};

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{check_dim, Error, Result};
use crate::gaussian::GaussianBelief;
use crate::linalg::{CovFactor, Vector};
use crate::models::SemiLinearGaussian;

/// Weighted particles whose total weight is an expected target count.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhdParticleSet {
    particles: Vec<Vector>,
    weights: Vec<f64>,
}

impl PhdParticleSet {
    pub fn new(particles: Vec<Vector>, weights: Vec<f64>) -> Result<Self> {
        if particles.len() != weights.len() {
            return Err(Error::LengthMismatch {
                particles: particles.len(),
                weights: weights.len(),
            });
        }
        if let Some(bad) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidWeight(*bad));
        }
        Ok(Self { particles, weights })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn particles(&self) -> &[Vector] {
        &self.particles
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn into_parts(self) -> (Vec<Vector>, Vec<f64>) {
        (self.particles, self.weights)
    }
}

/// Weighted sum of Gaussians; the total weight is an expected count.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GaussianMixture {
    components: Vec<(f64, GaussianBelief)>,
}

impl GaussianMixture {
    pub fn new(components: Vec<(f64, GaussianBelief)>) -> Result<Self> {
        if let Some((w, _)) = components.iter().find(|(w, _)| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidWeight(*w));
        }
        if let Some((_, first)) = components.first() {
            for (_, b) in &components {
                check_dim("mixture component", first.dim(), b.dim())?;
            }
        }
        Ok(Self { components })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn components(&self) -> &[(f64, GaussianBelief)] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.components.iter().map(|(w, _)| w).sum()
    }

    pub fn into_components(self) -> Vec<(f64, GaussianBelief)> {
        self.components
    }
}

/// Survival probability `p_s(xₙ₋₁)`.
#[derive(Debug, Clone, Copy)]
pub enum Survival {
    Constant(f64),
    Function(fn(&Vector) -> f64),
}

impl Survival {
    #[inline]
    pub fn prob(&self, x: &Vector) -> f64 {
        match self {
            Survival::Constant(p) => *p,
            Survival::Function(f) => f(x),
        }
    }
}

/// Poisson clutter with mean count `rate`, uniform over an axis-aligned box
/// of measurement space. The intensity is `rate / volume` everywhere, so the
/// update normalizer never vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformClutter {
    pub rate: f64,
    pub lower: Vector,
    pub upper: Vector,
}

impl UniformClutter {
    pub fn new(rate: f64, lower: Vector, upper: Vector) -> Result<Self> {
        check_dim("clutter box", lower.len(), upper.len())?;
        if !(rate >= 0.0) || lower.iter().zip(upper.iter()).any(|(a, b)| !(b > a)) {
            return Err(Error::InvalidParameter("clutter box must be nonempty and rate nonnegative"));
        }
        Ok(Self { rate, lower, upper })
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(self.upper.iter()).map(|(a, b)| b - a).product()
    }

    pub fn intensity(&self, _z: &Vector) -> f64 {
        self.rate / self.volume()
    }
}

/// Everything the PHD recursions need besides the measurements.
#[derive(Debug, Clone)]
pub struct PhdModelParams<M> {
    pub p_d: f64,
    pub survival: Survival,
    pub clutter: UniformClutter,
    pub birth: GaussianMixture,
    pub model: M,
}

impl<M: SemiLinearGaussian> PhdModelParams<M> {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_d) {
            return Err(Error::InvalidParameter("detection probability outside [0, 1]"));
        }
        if let Survival::Constant(p) = self.survival {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter("survival probability outside [0, 1]"));
            }
        }
        check_dim("clutter box", self.model.obs_dim(), self.clutter.lower.len())?;
        if let Some((_, b)) = self.birth.components().first() {
            check_dim("birth component", self.model.state_dim(), b.dim())?;
        }
        Ok(())
    }

    /// `B²(z) = p_d ∫ g(z|x) γ(x) dx`, closed form for a Gaussian-mixture
    /// birth and a linear observation. Returned in the log domain.
    pub fn log_birth_evidence(&self, z: &Vector) -> Result<f64> {
        let h = self.model.obs_matrix();
        let r = self.model.obs_noise();
        let mut terms = Vec::with_capacity(self.birth.len());
        for (w, b) in self.birth.components() {
            let s = h * b.cov() * h.transpose() + r;
            let f = CovFactor::new(&s).ok_or(Error::DegenerateInnovation)?;
            terms.push(w.ln() + f.log_density_residual(&(z - h * b.mean())));
        }
        Ok(self.p_d.ln() + crate::weights::log_sum_exp(&terms))
    }
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    x.ln()
}

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    x.exp()
}

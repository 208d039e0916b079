#![no_std]
extern crate alloc;

pub mod error;
pub mod gaussian;
pub mod kalman;
pub mod linalg;
pub mod resample;
pub mod rng;
pub mod weights;

pub use error::{Error, Result};
pub use gaussian::{GaussianBelief, GaussianSampler};
pub use kalman::{kalman_predict, kalman_update};
pub use linalg::{Matrix, Vector};
pub use resample::{resample, resample_indices, ResamplePolicy, ResampleScheme, ResampleTrigger};
pub use rng::RngStream;
pub use weights::{ess, normalize_weights, WeightedParticleSet};
pub mod models;
pub mod filter;
pub mod jmss;
pub mod phd;

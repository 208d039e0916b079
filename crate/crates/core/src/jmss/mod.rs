//! Jump Markov state-space filtering.
//!
//! [`rbpf`] handles the conditionally linear-Gaussian case, where each
//! particle carries a Kalman belief and the mode is marginalized exactly.
//! [`general`] handles semi-linear modes with hybrid `(x, r)` particles.

pub mod general;
pub mod rbpf;

pub use general::{
    general_jmss_step, general_jmss_step_all, jmss_is_marginal_step, jmss_mixture_proposal_step,
    mixture_proposal_weights, GeneralJmssOutput, MixtureDraw, HybridParticle, JmssEstimator, JumpProposal,
    ModeMarginalWeights, OptimalJumpProposal, TransitionJumpProposal,
};
pub use rbpf::{
    rbpf_advance, rbpf_cmc, rbpf_crude, rbpf_init, rbpf_propagate, rbpf_sample_modes, rbpf_step,
    JumpParticle, RbpfOutput, RbpfPropagation,
};

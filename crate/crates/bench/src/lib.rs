//! Experiment harness for `seqcmc-core`: scenario configs, truth
//! simulation, repeated runs and result files.

pub mod config;
pub mod experiment;
pub mod jmss;
pub mod output;
pub mod phd;
pub mod record;
pub mod reference;
pub mod scenario;
pub mod single;
pub mod truth;

pub use config::{ConfigError, ScenarioConfig};
pub use experiment::{run_experiment, RunResult};
pub use output::emit_results;
pub use truth::{generate_truth, TruthTape};

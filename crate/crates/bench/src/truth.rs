//! Ground-truth and measurement simulation.

use anyhow::Result;
use rand::seq::SliceRandom;
use rand_distr::{Distribution, Poisson};
use seqcmc_core::models::StateSpaceModel;
use seqcmc_core::{GaussianBelief, RngStream, Vector};

use crate::config::{PhdScenario, Scenario, ScenarioConfig};
use crate::scenario::{build_jmss, build_phd, diag, ScalarModel};

/// Stream of a run's seed reserved for the truth simulation.
pub const TRUTH_STREAM: u64 = 0;

#[derive(Debug, Clone, PartialEq)]
pub struct SingleTape {
    pub initial: f64,
    /// `xₙ` for `n = 1..=horizon`.
    pub states: Vec<f64>,
    pub observations: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JmssTape {
    pub initial: Vector,
    pub initial_mode: usize,
    pub states: Vec<Vector>,
    pub modes: Vec<usize>,
    pub observations: Vec<Vector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhdTape {
    /// Alive target states per scan `k = 0..horizon`.
    pub targets: Vec<Vec<Vector>>,
    /// Detections and clutter per scan, in random order.
    pub measurements: Vec<Vec<Vector>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TruthTape {
    Single(SingleTape),
    Jmss(JmssTape),
    Phd(PhdTape),
}

/// Simulates one tape. Deterministic in `seed`.
pub fn generate_truth(cfg: &ScenarioConfig, seed: u64) -> Result<TruthTape> {
    let mut rng = RngStream::with_stream(seed, TRUTH_STREAM);
    let h = cfg.horizon;
    Ok(match &cfg.scenario {
        Scenario::Single(s) => TruthTape::Single(single_tape(&ScalarModel::build(s)?, h, &mut rng)),
        Scenario::Jmss(s) => {
            let model = build_jmss(s)?;
            let r0 = model.chain().sample_initial(&mut rng);
            let x0 = model.initial().sample(&mut rng);
            let (mut x, mut r) = (x0.clone(), r0);
            let mut tape = JmssTape {
                initial: x0,
                initial_mode: r0,
                states: Vec::with_capacity(h),
                modes: Vec::with_capacity(h),
                observations: Vec::with_capacity(h),
            };
            for _ in 0..h {
                r = model.chain().sample_next(r, &mut rng);
                x = model.sample_transition(&x, r, &mut rng);
                tape.observations.push(model.sample_observation(&x, r, &mut rng));
                tape.states.push(x.clone());
                tape.modes.push(r);
            }
            TruthTape::Jmss(tape)
        }
        Scenario::Phd(s) => TruthTape::Phd(phd_tape(s, h, &mut rng)?),
    })
}

fn single_tape(model: &ScalarModel, h: usize, rng: &mut RngStream) -> SingleTape {
    fn run<M: StateSpaceModel>(m: &M, h: usize, rng: &mut RngStream) -> SingleTape {
        let x0 = m.sample_initial(rng);
        let mut x = x0.clone();
        let mut states = Vec::with_capacity(h);
        let mut observations = Vec::with_capacity(h);
        for _ in 0..h {
            x = m.sample_transition(&x, rng);
            observations.push(m.sample_observation(&x, rng)[0]);
            states.push(x[0]);
        }
        SingleTape {
            initial: x0[0],
            states,
            observations,
        }
    }
    match model {
        ScalarModel::Linear(m) => run(m, h, rng),
        ScalarModel::Arch(m) => run(m, h, rng),
        ScalarModel::Sv(m) => run(m, h, rng),
    }
}

fn phd_tape(s: &PhdScenario, h: usize, rng: &mut RngStream) -> Result<PhdTape> {
    let params = build_phd(s)?;
    let model = &params.model;
    let birth_cov = diag(&s.birth.cov_diag);
    let clutter = Poisson::new(s.clutter_rate.max(f64::MIN_POSITIVE))?;
    let [[x0, x1], [y0, y1]] = s.region;
    let mut current: Vec<Option<Vector>> = vec![None; s.targets.len()];
    let mut tape = PhdTape {
        targets: Vec::with_capacity(h),
        measurements: Vec::with_capacity(h),
    };
    for k in 0..h {
        for (t, slot) in s.targets.iter().zip(current.iter_mut()) {
            let alive = k >= t.birth_step && t.death_step.is_none_or(|d| k < d);
            *slot = if !alive {
                None
            } else if k == t.birth_step {
                let site = Vector::from_column_slice(&s.birth.sites[t.site]);
                Some(GaussianBelief::new(site, birth_cov.clone())?.sample(rng))
            } else {
                slot.as_ref().map(|x| model.sample_transition(x, rng))
            };
        }
        let alive: Vec<Vector> = current.iter().flatten().cloned().collect();
        let mut zs = Vec::new();
        for x in &alive {
            if rng.uniform() < s.p_d {
                zs.push(model.sample_observation(x, rng));
            }
        }
        let n_clutter = if s.clutter_rate > 0.0 {
            clutter.sample(rng) as usize
        } else {
            0
        };
        for _ in 0..n_clutter {
            let cx = x0 + (x1 - x0) * rng.uniform();
            let cy = y0 + (y1 - y0) * rng.uniform();
            zs.push(Vector::from_column_slice(&[cx, cy]));
        }
        // Detections first would leak identity to order-sensitive code.
        zs.shuffle(rng);
        tape.targets.push(alive);
        tape.measurements.push(zs);
    }
    Ok(tape)
}

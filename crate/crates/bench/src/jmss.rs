//! Manoeuvring-target runs: Rao-Blackwellized filter with the crude and
//! conditional estimators, against a large-N Rao-Blackwellized reference.

use anyhow::{anyhow, Result};
use seqcmc_core::jmss::{rbpf_advance, rbpf_cmc, rbpf_crude, rbpf_init, rbpf_propagate, rbpf_sample_modes, rbpf_step};
use seqcmc_core::models::{Identity, LinearJmss};
use seqcmc_core::{ResamplePolicy, RngStream, Vector};

use crate::config::{JmssScenario, ScenarioConfig};
use crate::record::{RunRecord, Series, Stopwatch};
use crate::reference::REFERENCE_STREAM;
use crate::scenario::build_jmss;
use crate::truth::JmssTape;

pub const CRUDE_LABEL: &str = "rbpf/crude";
pub const CMC_LABEL: &str = "rbpf/cmc";
const FILTER_STREAM: u64 = 1;

pub fn labels() -> Vec<String> {
    vec![CRUDE_LABEL.to_string(), CMC_LABEL.to_string()]
}

/// Conditional-estimator means of a Rao-Blackwellized run with `n` particles.
pub fn rbpf_means(
    model: &LinearJmss,
    ys: &[Vector],
    n: usize,
    policy: &ResamplePolicy,
    rng: &mut RngStream,
) -> Result<Vec<Vector>> {
    let phi = Identity(model.state_dim());
    let mut particles = rbpf_init(model, n, rng);
    let mut out = Vec::with_capacity(ys.len());
    for y in ys {
        let step = rbpf_step(&particles, model, y, &phi, policy, rng)?;
        out.push(step.cmc);
        particles = step.particles;
    }
    Ok(out)
}

struct Trace {
    crude: Vec<Vector>,
    cmc: Vec<Vector>,
    cost_crude: Vec<f64>,
    cost_cmc: Vec<f64>,
}

/// The filter under test. Each estimator is charged the shared Kalman
/// propagation plus its own code path.
fn run_filter(
    model: &LinearJmss,
    ys: &[Vector],
    n: usize,
    policy: &ResamplePolicy,
    watch: Stopwatch,
    rng: &mut RngStream,
) -> Result<Trace> {
    let phi = Identity(model.state_dim());
    let mut particles = rbpf_init(model, n, rng);
    let mut t = Trace {
        crude: Vec::with_capacity(ys.len()),
        cmc: Vec::with_capacity(ys.len()),
        cost_crude: Vec::with_capacity(ys.len()),
        cost_cmc: Vec::with_capacity(ys.len()),
    };
    for (k, y) in ys.iter().enumerate() {
        let (prop, t_prop) = watch.time(|| rbpf_propagate(&particles, model, y));
        let prop = prop?;
        if n > 1 && prop.weights.iter().any(|w| *w > seqcmc_core::filter::DEGENERACY_LIMIT) {
            return Err(anyhow!("step {}: weight degeneracy", k + 1));
        }
        let (cmc, t_cmc) = watch.time(|| rbpf_cmc(&prop, &phi));
        let ((modes, crude), t_crude) = watch.time(|| {
            let modes = rbpf_sample_modes(&prop, rng);
            let crude = rbpf_crude(&prop, &modes, &phi);
            (modes, crude)
        });
        t.cmc.push(cmc?);
        t.crude.push(crude?);
        t.cost_cmc.push(t_prop + t_cmc);
        t.cost_crude.push(t_prop + t_crude);
        particles = rbpf_advance(prop, &modes, policy, rng)?.0;
    }
    Ok(t)
}

pub fn run_jmss(
    cfg: &ScenarioConfig,
    s: &JmssScenario,
    tape: &JmssTape,
    seed: u64,
    watch: Stopwatch,
) -> Result<RunRecord> {
    let model = build_jmss(s)?;
    let policy = cfg.resampling.policy();
    let ys = &tape.observations;
    let mut record = RunRecord {
        seed,
        degenerate: None,
        series: Vec::new(),
    };
    let mut ref_rng = RngStream::with_stream(seed, REFERENCE_STREAM);
    let reference = match rbpf_means(&model, ys, s.reference_particles, &policy, &mut ref_rng) {
        Ok(r) => r,
        Err(e) => {
            record.degenerate = Some(format!("reference: {e}"));
            return Ok(record);
        }
    };
    let mut rng = RngStream::with_stream(seed, FILTER_STREAM);
    let t = match run_filter(&model, ys, s.particles, &policy, watch, &mut rng) {
        Ok(t) => t,
        Err(e) => {
            record.degenerate = Some(format!("rbpf: {e}"));
            return Ok(record);
        }
    };
    let err = |est: &[Vector]| -> Vec<f64> {
        est.iter().zip(&reference).map(|(e, r)| (e - r).norm_squared()).collect()
    };
    let mut crude = Series::new(CRUDE_LABEL);
    crude.sq_err = err(&t.crude);
    crude.cost = t.cost_crude;
    let mut cmc = Series::new(CMC_LABEL);
    cmc.sq_err = err(&t.cmc);
    cmc.cost = t.cost_cmc;
    record.series = vec![crude, cmc];
    Ok(record)
}

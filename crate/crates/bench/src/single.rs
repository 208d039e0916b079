//! Single-target runs: scalar models, SIR / FA / bootstrap / approximate
//! kernel filters, Kalman or large-bootstrap reference.

use anyhow::{anyhow, Result};
use seqcmc_core::filter::{
    bootstrap_step, fa_step, generic_proposal_step, sir_step, CmcMode, EstimatorReport,
    FilterState, TransitionProposal,
};
use seqcmc_core::kalman::kalman_predict_full;
use seqcmc_core::models::{ApproxKernel, MomentFunction, OptimalKernel, SemiLinearGaussian};
use seqcmc_core::{kalman_update, ResamplePolicy, RngStream, Vector};

use crate::config::{estimator_label, ErrorTarget, ScenarioConfig, SingleFilter, SingleScenario};
use crate::record::{RunRecord, Series, Stopwatch};
use crate::reference::{bootstrap_reference, REFERENCE_STREAM};
use crate::scenario::{moment, scalar_moment, ScalarModel};
use crate::truth::SingleTape;

/// Stream of filter `j` is `FILTER_STREAM + j`.
pub const FILTER_STREAM: u64 = 1;

/// Exact filtered means of a scalar linear-Gaussian model.
pub fn kalman_means(model: &seqcmc_core::models::LinearGaussianModel, ys: &[f64]) -> Result<Vec<f64>> {
    let mut belief = model.initial().clone();
    let mut out = Vec::with_capacity(ys.len());
    for &y in ys {
        let pred = kalman_predict_full(&belief, model.transition_matrix(), model.transition_cov())?;
        let (post, _) = kalman_update(
            &pred,
            model.obs_matrix(),
            model.obs_noise(),
            &Vector::from_element(1, y),
        )?;
        out.push(post.mean()[0]);
        belief = post;
    }
    Ok(out)
}

pub fn reference_means(s: &SingleScenario, model: &ScalarModel, tape: &SingleTape, seed: u64) -> Result<Vec<f64>> {
    match model {
        ScalarModel::Linear(m) => kalman_means(m, &tape.observations),
        _ => {
            let mut rng = RngStream::with_stream(seed, REFERENCE_STREAM);
            Ok(bootstrap_reference(
                model,
                &tape.observations,
                s.reference_particles,
                scalar_moment(s),
                &mut rng,
            )?)
        }
    }
}

/// Estimates of every output of one filter, per step, and the step costs.
struct FilterTrace {
    estimates: Vec<Vec<f64>>,
    cost: Vec<f64>,
}

fn pick(report: &EstimatorReport, output: &str) -> Option<f64> {
    let v = match output {
        "crude" => Some(&report.crude),
        "cmc" | "cmc_kernel" => report.cmc.as_ref(),
        "cmc_sir" | "cmc_predictive" => report.cmc_alt.as_ref(),
        _ => None,
    };
    v.map(|v| v[0])
}

/// Runs one particle filter over `ys`, recording the selected outputs and
/// the clock time of each step.
fn drive<S>(n: usize, outputs: &[String], ys: &[f64], watch: Stopwatch, mut state: FilterState, mut step: S) -> Result<FilterTrace>
where
    S: FnMut(&FilterState, &Vector) -> seqcmc_core::Result<(FilterState, EstimatorReport)>,
{
    let mut trace = FilterTrace {
        estimates: vec![Vec::with_capacity(ys.len()); outputs.len()],
        cost: Vec::with_capacity(ys.len()),
    };
    for (k, &y) in ys.iter().enumerate() {
        let y = Vector::from_element(1, y);
        let (res, dt) = watch.time(|| step(&state, &y));
        let (next, report) = res.map_err(|e| anyhow!("step {}: {e}", k + 1))?;
        if n > 1 && report.degenerate {
            return Err(anyhow!("step {}: weight degeneracy", k + 1));
        }
        for (o, est) in outputs.iter().zip(trace.estimates.iter_mut()) {
            est.push(pick(&report, o).ok_or_else(|| anyhow!("output {o} missing"))?);
        }
        trace.cost.push(dt);
        state = next;
    }
    Ok(trace)
}

#[allow(clippy::too_many_arguments)]
fn run_particle<M: ApproxKernel>(
    model: &M,
    kernel: Option<&dyn OptimalKernel>,
    filter: SingleFilter,
    n: usize,
    outputs: &[String],
    ys: &[f64],
    f: &dyn MomentFunction,
    policy: &ResamplePolicy,
    watch: Stopwatch,
    rng: &mut RngStream,
) -> Result<FilterTrace> {
    let init = FilterState::from_prior(model, n, rng)?;
    let need_kernel = || anyhow!("{} needs an exact optimal kernel", filter.name());
    match filter {
        SingleFilter::Sir => {
            let k = kernel.ok_or_else(need_kernel)?;
            drive(n, outputs, ys, watch, init, |s, y| sir_step(s, k, y, f, policy, rng))
        }
        SingleFilter::Fa => {
            let k = kernel.ok_or_else(need_kernel)?;
            drive(n, outputs, ys, watch, init, |s, y| fa_step(s, k, y, f, policy.scheme, rng))
        }
        SingleFilter::Bootstrap => {
            drive(n, outputs, ys, watch, init, |s, y| bootstrap_step(s, model, y, f, policy, rng))
        }
        SingleFilter::Approx => drive(n, outputs, ys, watch, init, |s, y| {
            let q = TransitionProposal(model);
            generic_proposal_step(s, model, y, f, &q, CmcMode::Both, policy, rng)
        }),
        SingleFilter::Kalman => Err(anyhow!("kalman is not a particle filter")),
    }
}

/// Row labels of a single-target scenario, in output order.
pub fn labels(s: &SingleScenario) -> Vec<String> {
    s.filters
        .iter()
        .flat_map(|spec| {
            spec.outputs
                .iter()
                .map(move |o| estimator_label(spec.filter, o, spec.particles))
        })
        .collect()
}

pub fn run_single(
    cfg: &ScenarioConfig,
    s: &SingleScenario,
    tape: &SingleTape,
    seed: u64,
    watch: Stopwatch,
) -> Result<RunRecord> {
    let model = ScalarModel::build(s)?;
    let f = moment(s);
    let fx = scalar_moment(s);
    let policy = cfg.resampling.policy();
    let ys = &tape.observations;
    let mut record = RunRecord {
        seed,
        degenerate: None,
        series: Vec::new(),
    };
    let target: Vec<f64> = match s.mse_against {
        ErrorTarget::Truth => tape.states.iter().map(|x| fx(*x)).collect(),
        ErrorTarget::Reference => match reference_means(s, &model, tape, seed) {
            Ok(r) => r,
            Err(e) => {
                record.degenerate = Some(format!("reference: {e}"));
                return Ok(record);
            }
        },
    };
    for (j, spec) in s.filters.iter().enumerate() {
        let mut rng = RngStream::with_stream(seed, FILTER_STREAM + j as u64);
        let trace = if spec.filter == SingleFilter::Kalman {
            let ScalarModel::Linear(m) = &model else {
                return Err(anyhow!("kalman needs the linear model"));
            };
            let (means, dt) = watch.time(|| kalman_means(m, ys));
            // One clock read for the whole pass, spread over the steps.
            let per_step = dt / ys.len() as f64;
            Ok(FilterTrace {
                estimates: vec![means?],
                cost: vec![per_step; ys.len()],
            })
        } else {
            let n = spec.particles;
            let (fs, o) = (f.as_ref(), &spec.outputs);
            let filter = spec.filter;
            match &model {
                ScalarModel::Linear(m) => {
                    run_particle(m, Some(m), filter, n, o, ys, fs, &policy, watch, &mut rng)
                }
                ScalarModel::Arch(m) => {
                    run_particle(m, Some(m), filter, n, o, ys, fs, &policy, watch, &mut rng)
                }
                ScalarModel::Sv(m) => {
                    run_particle(m, None, filter, n, o, ys, fs, &policy, watch, &mut rng)
                }
            }
        };
        let trace = match trace {
            Ok(t) => t,
            Err(e) => {
                record.degenerate = Some(format!("{}: {e}", spec.filter.name()));
                record.series.clear();
                return Ok(record);
            }
        };
        for (o, est) in spec.outputs.iter().zip(trace.estimates) {
            let mut series = Series::new(estimator_label(spec.filter, o, spec.particles));
            series.sq_err = est.iter().zip(&target).map(|(e, t)| (e - t) * (e - t)).collect();
            series.cost = trace.cost.clone();
            record.series.push(series);
        }
    }
    Ok(record)
}

//! Repeated-run experiments and their aggregation.

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{
    BirthEvidence, ErrorTarget, Placement, Scenario, ScenarioConfig, SingleFilter, SingleModel,
    TimingMode,
};
use crate::record::{RunRecord, Stopwatch};
use crate::truth::{generate_truth, TruthTape};

/// One output row: per-step averages over the retained runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub step: usize,
    pub estimator: String,
    pub mse: Option<f64>,
    pub cost_s: Option<f64>,
    pub efficiency: Option<f64>,
    pub ospa_mean: Option<f64>,
    pub ospa_sd: Option<f64>,
    pub count_mean: Option<f64>,
    pub count_sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegenerateRun {
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub name: String,
    pub kind: String,
    pub horizon: usize,
    pub seeds: Vec<u64>,
    pub runs_used: usize,
    pub runs_degenerate: usize,
    pub degenerate: Vec<DegenerateRun>,
    pub resampling_policy: String,
    pub birth_placement: String,
    pub reference: String,
    pub timing: String,
    pub git_revision: String,
    pub version: String,
    pub decisions: Vec<String>,
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub metadata: Metadata,
    pub rows: Vec<Row>,
}

impl RunResult {
    pub fn multi_target(&self) -> bool {
        self.metadata.kind == "phd"
    }

    pub fn estimators(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.estimator) {
                out.push(r.estimator.clone());
            }
        }
        out
    }

    /// Mean over steps `>= from_step` of one column of one estimator.
    /// `None` if the column is empty there.
    pub fn time_average(
        &self,
        estimator: &str,
        from_step: usize,
        column: impl Fn(&Row) -> Option<f64>,
    ) -> Option<f64> {
        let vals: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.estimator == estimator && r.step >= from_step)
            .filter_map(&column)
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }

    pub fn column(&self, estimator: &str, column: impl Fn(&Row) -> Option<f64>) -> Vec<Option<f64>> {
        self.rows
            .iter()
            .filter(|r| r.estimator == estimator)
            .map(column)
            .collect()
    }

    /// Fraction of runs excluded as degenerate.
    pub fn degenerate_fraction(&self) -> f64 {
        self.metadata.runs_degenerate as f64 / self.metadata.seeds.len().max(1) as f64
    }
}

/// `1/(MSE · cost)` where both are positive.
pub fn efficiency(mse: Option<f64>, cost: Option<f64>) -> Option<f64> {
    match (mse, cost) {
        (Some(m), Some(c)) if m > 0.0 && c > 0.0 => Some(1.0 / (m * c)),
        _ => None,
    }
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Sample standard deviation; zero for a single value.
fn sd(v: &[f64]) -> Option<f64> {
    let m = mean(v)?;
    if v.len() < 2 {
        return Some(0.0);
    }
    let ss: f64 = v.iter().map(|x| (x - m) * (x - m)).sum();
    Some((ss / (v.len() - 1) as f64).sqrt())
}

fn median(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    Some(if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    })
}

/// Number of pool threads: `SEQCMC_THREADS` if set, capped by the machine.
pub fn pool_threads() -> usize {
    let avail = std::thread::available_parallelism().map_or(1, |n| n.get());
    std::env::var("SEQCMC_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n >= 1)
        .map_or(avail, |n| n.min(avail))
}

pub fn labels(cfg: &ScenarioConfig) -> Vec<String> {
    match &cfg.scenario {
        Scenario::Single(s) => crate::single::labels(s),
        Scenario::Jmss(_) => crate::jmss::labels(),
        Scenario::Phd(s) => crate::phd::labels(s),
    }
}

/// Simulates the truth of `seed` and runs every selected estimator on it.
pub fn run_once(cfg: &ScenarioConfig, seed: u64, watch: Stopwatch) -> Result<RunRecord> {
    let tape = generate_truth(cfg, seed)?;
    match (&cfg.scenario, &tape) {
        (Scenario::Single(s), TruthTape::Single(t)) => crate::single::run_single(cfg, s, t, seed, watch),
        (Scenario::Jmss(s), TruthTape::Jmss(t)) => crate::jmss::run_jmss(cfg, s, t, seed, watch),
        (Scenario::Phd(s), TruthTape::Phd(t)) => crate::phd::run_phd(cfg, s, t, seed, watch),
        _ => unreachable!("tape kind follows the scenario kind"),
    }
}

pub fn run_experiment(cfg: &ScenarioConfig) -> Result<RunResult> {
    cfg.validate()?;
    let seeds = cfg.seed_list();
    let watch = Stopwatch(cfg.timing);
    if cfg.timing == TimingMode::Measured {
        // Warm caches and the allocator; the result is discarded.
        run_once(cfg, seeds[0], watch)?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(pool_threads())
        .build()
        .context("building the run pool")?;
    let records: Vec<RunRecord> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| run_once(cfg, seed, watch).with_context(|| format!("run with seed {seed}")))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(aggregate(cfg, &records))
}

/// Per-step statistics over the non-degenerate runs, summed in seed-list
/// order so the result does not depend on scheduling.
pub fn aggregate(cfg: &ScenarioConfig, records: &[RunRecord]) -> RunResult {
    let kept: Vec<&RunRecord> = records.iter().filter(|r| r.degenerate.is_none()).collect();
    let degenerate: Vec<DegenerateRun> = records
        .iter()
        .filter_map(|r| {
            r.degenerate.as_ref().map(|reason| DegenerateRun {
                seed: r.seed,
                reason: reason.clone(),
            })
        })
        .collect();
    let first_step = usize::from(!matches!(cfg.scenario, Scenario::Phd(_)));
    let labels = labels(cfg);
    let mut rows = Vec::with_capacity(cfg.horizon * labels.len());
    for k in 0..cfg.horizon {
        for (li, label) in labels.iter().enumerate() {
            let gather = |pick: fn(&crate::record::Series) -> &Vec<f64>| -> Vec<f64> {
                kept.iter()
                    .filter_map(|r| pick(&r.series[li]).get(k).copied())
                    .collect()
            };
            let sq = gather(|s| &s.sq_err);
            let cost = gather(|s| &s.cost);
            let ospa = gather(|s| &s.ospa);
            let count = gather(|s| &s.count);
            let mse = mean(&sq);
            let cost_s = match cfg.timing {
                TimingMode::Measured => median(&cost),
                TimingMode::Disabled => None,
            };
            rows.push(Row {
                step: k + first_step,
                estimator: label.clone(),
                mse,
                cost_s,
                efficiency: efficiency(mse, cost_s),
                ospa_mean: mean(&ospa),
                ospa_sd: sd(&ospa),
                count_mean: mean(&count),
                count_sd: sd(&count),
            });
        }
    }
    RunResult {
        metadata: metadata(cfg, records, kept.len(), degenerate),
        rows,
    }
}

fn metadata(
    cfg: &ScenarioConfig,
    records: &[RunRecord],
    runs_used: usize,
    degenerate: Vec<DegenerateRun>,
) -> Metadata {
    let (birth_placement, reference, decisions) = decisions(cfg);
    Metadata {
        name: cfg.name.clone(),
        kind: cfg.scenario.kind().to_string(),
        horizon: cfg.horizon,
        seeds: records.iter().map(|r| r.seed).collect(),
        runs_used,
        runs_degenerate: degenerate.len(),
        degenerate,
        resampling_policy: cfg.resampling.describe(),
        birth_placement,
        reference,
        timing: match cfg.timing {
            TimingMode::Measured => {
                "measured: monotone clock, median over runs per step, one warm-up run discarded"
                    .to_string()
            }
            TimingMode::Disabled => "disabled: cost and efficiency not recorded".to_string(),
        },
        git_revision: env!("SEQCMC_GIT_REVISION").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        decisions,
        config: serde_json::to_value(cfg).unwrap_or(serde_json::Value::Null),
    }
}

fn placement(p: Placement) -> &'static str {
    match p {
        Placement::Prior => "drawn from the birth mixture on the fixed birth sites",
        Placement::AroundMeasurements => {
            "drawn around the current measurements, importance-weighted back to the birth intensity"
        }
    }
}

/// Birth placement, reference description and the decisions in force.
fn decisions(cfg: &ScenarioConfig) -> (String, String, Vec<String>) {
    let mut d = vec![
        format!("resampling: {}", cfg.resampling.describe()),
        "random streams: truth 0, filters 1.., reference 1000, all keyed by the run seed"
            .to_string(),
    ];
    match &cfg.scenario {
        Scenario::Single(s) => {
            let reference = match s.model {
                SingleModel::Linear { .. } => "exact Kalman filter mean".to_string(),
                _ => format!(
                    "bootstrap filter with {} particles, systematic resampling every step",
                    s.reference_particles
                ),
            };
            d.push(match s.mse_against {
                ErrorTarget::Reference => "squared error against the reference mean".to_string(),
                ErrorTarget::Truth => "squared error against f of the hidden state".to_string(),
            });
            d.push("cost: whole filter step, shared by the estimators of one filter".to_string());
            if s.filters.iter().any(|f| f.filter == SingleFilter::Approx) {
                d.push("approx filter: transition proposal, Gaussian approximate kernel for the conditional estimators".to_string());
            }
            if s.filters.iter().any(|f| f.filter == SingleFilter::Fa) {
                d.push("fa: ancestors resampled every step".to_string());
            }
            ("not applicable".to_string(), reference, d)
        }
        Scenario::Jmss(s) => {
            d.push("cost: shared Kalman propagation plus the estimator's own path".to_string());
            d.push("squared error summed over the four state components".to_string());
            d.push(format!(
                "turn rates {:?} deg/s, self-transition {}",
                s.turn_rates_deg, s.stay
            ));
            (
                "not applicable".to_string(),
                format!(
                    "Rao-Blackwellized conditional estimate with {} particles on an independent stream",
                    s.reference_particles
                ),
                d,
            )
        }
        Scenario::Phd(s) => {
            let birth = format!(
                "smc: {}; cmc: {}; gm: birth mixture components",
                placement(s.smc_birth_placement),
                placement(s.cmc_birth_placement)
            );
            d.push(format!("birth: {birth}"));
            d.push("cmc next cloud: one draw per persistent particle from its kernel mixture, resampled to per_target particles per expected target".to_string());
            d.push(match s.cmc_birth_evidence {
                BirthEvidence::ClosedForm => "cmc birth evidence: closed form".to_string(),
                BirthEvidence::Sampled => "cmc birth evidence: birth-particle estimate".to_string(),
            });
            d.push(format!(
                "gm: prune {}, merge radius {} (squared Mahalanobis, heavier component), cap {}",
                s.gm.prune, s.gm.merge, s.gm.max_components
            ));
            d.push(format!("ospa: p = {}, c = {}, on positions", s.ospa.p, s.ospa.c));
            d.push(format!("extraction threshold {}", s.extraction_threshold));
            d.push("clutter intensity: rate over region area".to_string());
            (birth, "simulated target states".to_string(), d)
        }
    }
}

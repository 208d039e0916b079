//! Multi-target runs: SMC, CMC and Gaussian-mixture PHD filters scored by
//! OSPA on positions and by the expected target count.

use anyhow::Result;
use seqcmc_core::phd::{
    cmc_phd_step, extract_targets, gm_extract, gm_phd_step, ospa, phd_resample, sample_birth,
    smc_extract, smc_phd_step, BirthPlacement, CmcCloud, CmcPhdState, GaussianMixture, GmPhdConfig,
    OspaParams, PhdParticleSet,
};
use seqcmc_core::{RngStream, Vector};

use crate::config::{BirthEvidence, PhdFilter, PhdScenario, Placement, ScenarioConfig};
use crate::record::{RunRecord, Series, Stopwatch};
use crate::scenario::build_phd;
use crate::truth::PhdTape;

const FILTER_STREAM: u64 = 1;

pub fn labels(s: &PhdScenario) -> Vec<String> {
    s.filters.iter().map(|f| f.name().to_string()).collect()
}

impl From<Placement> for BirthPlacement {
    fn from(p: Placement) -> Self {
        match p {
            Placement::Prior => BirthPlacement::Prior,
            Placement::AroundMeasurements => BirthPlacement::AroundMeasurements,
        }
    }
}

/// Position components of a `[pₓ, vₓ, p_y, v_y]` state.
fn position(x: &Vector) -> Vector {
    Vector::from_column_slice(&[x[0], x[2]])
}

/// Target count for resampling: `per_target · max(1, round(mass))`.
fn cloud_size(per_target: usize, mass: f64) -> usize {
    per_target * (mass.round() as usize).max(1)
}

struct Trace {
    estimates: Vec<Vec<Vector>>,
    counts: Vec<f64>,
    cost: Vec<f64>,
}

fn run_filter(
    cfg: &ScenarioConfig,
    s: &PhdScenario,
    which: PhdFilter,
    tape: &PhdTape,
    watch: Stopwatch,
    rng: &mut RngStream,
) -> Result<Trace> {
    let params = build_phd(s)?;
    let scheme = cfg.resampling.policy().scheme;
    let h = tape.measurements.len();
    let mut t = Trace {
        estimates: Vec::with_capacity(h),
        counts: Vec::with_capacity(h),
        cost: Vec::with_capacity(h),
    };
    let push = |t: &mut Trace, est: Vec<Vector>, count: f64, dt: f64| {
        t.estimates.push(est);
        t.counts.push(count);
        t.cost.push(dt);
    };
    match which {
        PhdFilter::Smc => {
            let mut set = PhdParticleSet::empty();
            for zs in &tape.measurements {
                let (res, dt) = watch.time(|| -> seqcmc_core::Result<_> {
                    let placement = s.smc_birth_placement.into();
                    let birth = sample_birth(&params, zs, s.birth_particles, placement, rng)?;
                    let out = smc_phd_step(&set, &birth, &params, zs, rng)?;
                    let est = smc_extract(&out, s.extraction_threshold);
                    let mass = out.set.total_mass();
                    let next = phd_resample(&out.set, cloud_size(s.per_target, mass), scheme, rng)?;
                    Ok((next, est, mass))
                });
                let (next, est, mass) = res?;
                set = next;
                push(&mut t, est, mass, dt);
            }
        }
        PhdFilter::Cmc => {
            let mut state = CmcPhdState::new(PhdParticleSet::empty());
            let closed = s.cmc_birth_evidence == BirthEvidence::ClosedForm;
            let cloud = CmcCloud::new(s.per_target, scheme).split_missed(s.cmc_split_missed);
            for zs in &tape.measurements {
                let (res, dt) = watch.time(|| -> seqcmc_core::Result<_> {
                    let placement = s.cmc_birth_placement.into();
                    let birth = sample_birth(&params, zs, s.birth_particles, placement, rng)?;
                    let out = cmc_phd_step(&state, birth, &params, zs, closed, None, cloud, rng)?;
                    let est = extract_targets(&out.state, s.extraction_threshold)
                        .into_iter()
                        .map(|(x, _)| x)
                        .collect();
                    Ok((out, est))
                });
                let (out, est) = res?;
                push(&mut t, est, out.count, dt);
                state = out.state;
            }
        }
        PhdFilter::Gm => {
            let gm = GmPhdConfig {
                prune: s.gm.prune,
                merge: s.gm.merge,
                max_components: s.gm.max_components,
            };
            let mut mix = GaussianMixture::empty();
            for zs in &tape.measurements {
                let (res, dt) = watch.time(|| gm_phd_step(&mix, &params, zs, &gm));
                mix = res?;
                let est = gm_extract(&mix, s.extraction_threshold);
                push(&mut t, est, mix.total_weight(), dt);
            }
        }
    }
    Ok(t)
}

pub fn run_phd(
    cfg: &ScenarioConfig,
    s: &PhdScenario,
    tape: &PhdTape,
    seed: u64,
    watch: Stopwatch,
) -> Result<RunRecord> {
    let mut record = RunRecord {
        seed,
        degenerate: None,
        series: Vec::new(),
    };
    let metric = OspaParams {
        p: s.ospa.p,
        c: s.ospa.c,
    };
    let truth: Vec<Vec<Vector>> = tape
        .targets
        .iter()
        .map(|xs| xs.iter().map(position).collect())
        .collect();
    for (j, &which) in s.filters.iter().enumerate() {
        let mut rng = RngStream::with_stream(seed, FILTER_STREAM + j as u64);
        let t = match run_filter(cfg, s, which, tape, watch, &mut rng) {
            Ok(t) => t,
            Err(e) => {
                record.degenerate = Some(format!("{}: {e}", which.name()));
                record.series.clear();
                return Ok(record);
            }
        };
        if t.counts.iter().any(|c| !c.is_finite()) {
            record.degenerate = Some(format!("{}: non-finite count", which.name()));
            record.series.clear();
            return Ok(record);
        }
        let mut series = Series::new(which.name());
        series.ospa = t
            .estimates
            .iter()
            .zip(&truth)
            .map(|(est, tr)| {
                let est: Vec<Vector> = est.iter().map(position).collect();
                ospa(&est, tr, &metric)
            })
            .collect();
        series.count = t.counts;
        series.cost = t.cost;
        record.series.push(series);
    }
    Ok(record)
}

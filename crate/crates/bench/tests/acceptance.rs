//! End-to-end acceptance checks. Each test prints one `criterion N: PASS` or
//! `criterion N: FAIL` line (bypassing output capture) and then asserts.
//!
//! The experiment criteria run the shipped presets in `scenarios/` at full
//! size, so this target takes tens of minutes.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use seqcmc_bench::config::{ErrorTarget, OutputFormat, Scenario, TimingMode};
use seqcmc_bench::experiment::{run_experiment, RunResult};
use seqcmc_bench::{emit_results, ScenarioConfig};
use seqcmc_core::filter::{fa_step, sir_step, FilterState};
use seqcmc_core::jmss::{general_jmss_step_all, rbpf_init, rbpf_step, HybridParticle};
use seqcmc_core::models::{Identity, LinearGaussianModel, LinearJmss, LinearMode, ModeChain, OptimalKernel};
use seqcmc_core::phd::{
    cmc_phd_step, crude_phd_count, ospa, ospa_brute_force, sample_birth, smc_phd_step, BirthPlacement, CmcCloud,
    CmcPhdState, GaussianMixture, OspaParams, PhdModelParams, PhdParticleSet, Survival, UniformClutter,
};
use seqcmc_core::{
    kalman_update, GaussianBelief, Matrix, ResamplePolicy, ResampleScheme, RngStream, Vector, WeightedParticleSet,
};

fn report(n: u32, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(out, "criterion {n}: {verdict} ({detail})").unwrap();
    out.flush().unwrap();
    assert!(pass, "criterion {n} failed: {detail}");
}

fn preset(name: &str) -> ScenarioConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name);
    ScenarioConfig::load(&path).unwrap()
}

fn quick(name: &str) -> ScenarioConfig {
    let mut c = preset(name);
    c.timing = TimingMode::Disabled;
    c
}

fn avg_mse(res: &RunResult, est: &str) -> f64 {
    res.time_average(est, 1, |r| r.mse)
        .unwrap_or_else(|| panic!("no MSE for {est}"))
}

fn v1(x: f64) -> Vector {
    Vector::from_element(1, x)
}

fn m1(x: f64) -> Matrix {
    Matrix::from_element(1, 1, x)
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

fn within_3se(draws: &[f64], target: f64) -> (bool, String) {
    let (m, se) = mean_se(draws);
    ((m - target).abs() < 3.0 * se, format!("{m:.6} vs {target:.6} ± {se:.2e}"))
}

#[test]
fn criterion_01_closed_forms() {
    // Linear model a = 0.9, q = 10, r = 1: L = q + r = 11, P = q r / L = 10/11.
    let m = LinearGaussianModel::scalar(0.9, 10.0, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for (xp, y) in [(0.0, 1.1), (2.0, -0.5), (-3.0, 4.0)] {
        let k = m.optimal_kernel(&v1(xp), &v1(y)).unwrap();
        let mean = 0.9 * xp + 10.0 / 11.0 * (y - 0.9 * xp);
        worst = worst.max((k.mean()[0] - mean).abs());
        worst = worst.max((k.cov()[(0, 0)] - 10.0 / 11.0).abs());
        let lp = m.predictive_loglik(&v1(xp), &v1(y)).unwrap();
        let hand = -0.5 * (22.0 * PI).ln() - (y - 0.9 * xp).powi(2) / 22.0;
        worst = worst.max((lp - hand).abs());
    }
    let kernel_ok = worst < 1e-12;

    // P = [[2, .5], [.5, 1]], H = [1 0], R = .5, y = 2, prior mean (1, 2):
    // S = 2.5, K = (.8, .2), posterior mean (1.8, 2.2),
    // covariance [[.4, .1], [.1, .9]].
    let b = GaussianBelief::new(
        Vector::from_vec(vec![1.0, 2.0]),
        Matrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]),
    )
    .unwrap();
    let (post, ll) = kalman_update(&b, &Matrix::from_row_slice(1, 2, &[1.0, 0.0]), &m1(0.5), &v1(2.0)).unwrap();
    let cov = [0.4, 0.1, 0.1, 0.9];
    let mut kworst: f64 = (post.mean()[0] - 1.8).abs().max((post.mean()[1] - 2.2).abs());
    for i in 0..2 {
        for j in 0..2 {
            kworst = kworst.max((post.cov()[(i, j)] - cov[2 * i + j]).abs());
        }
    }
    kworst = kworst.max((ll - (-0.5 * (5.0 * PI).ln() - 0.2)).abs());
    let kalman_ok = kworst < 1e-10;
    report(
        1,
        kernel_ok && kalman_ok,
        &format!("kernel/predictive max err {worst:.1e}, kalman max err {kworst:.1e}"),
    );
}

fn frozen() -> FilterState {
    let xs = [-1.5, -0.2, 0.4, 2.0, 3.1];
    let ws = [0.1, 0.3, 0.25, 0.2, 0.15];
    FilterState::new(WeightedParticleSet::new(xs.iter().map(|x| v1(*x)).collect(), ws.to_vec()).unwrap())
}

fn two_mode(stay: f64) -> LinearJmss {
    let mode = |a: f64| LinearMode {
        f: m1(a),
        g: m1(1.0),
        h: m1(1.0),
        l: m1(1.0),
    };
    LinearJmss::new(
        vec![mode(0.5), mode(1.5)],
        m1(1.0),
        m1(0.5),
        ModeChain::symmetric(2, stay).unwrap(),
        GaussianBelief::scalar(0.2, 1.0).unwrap(),
    )
    .unwrap()
}

#[test]
fn criterion_02_conditional_expectation_identity() {
    const DRAWS: u64 = 10_000;
    let mut lines = Vec::new();
    let mut pass = true;
    let mut check = |name: &str, draws: &[f64], target: f64| {
        let (ok, d) = within_3se(draws, target);
        pass &= ok;
        lines.push(format!("{name} {d}"));
    };

    let m = LinearGaussianModel::scalar(0.9, 10.0, 1.0).unwrap();
    let st = frozen();
    let y = v1(1.7);
    let policy = ResamplePolicy::default();
    let target = sir_step(&st, &m, &y, &Identity(1), &policy, &mut RngStream::new(0)).unwrap().1.cmc.unwrap()[0];
    let sir: Vec<f64> = (0..DRAWS)
        .map(|s| sir_step(&st, &m, &y, &Identity(1), &policy, &mut RngStream::new(100 + s)).unwrap().1.crude[0])
        .collect();
    check("sir", &sir, target);
    let fa: Vec<f64> = (0..DRAWS)
        .map(|s| {
            fa_step(&st, &m, &y, &Identity(1), ResampleScheme::Multinomial, &mut RngStream::new(100 + s))
                .unwrap()
                .1
                .crude[0]
        })
        .collect();
    check("fa", &fa, target);

    let sys = two_mode(0.6);
    let ps = rbpf_init(&sys, 5, &mut RngStream::new(8));
    let y = v1(1.4);
    let never = ResamplePolicy::never();
    let target = rbpf_step(&ps, &sys, &y, &Identity(1), &never, &mut RngStream::new(0)).unwrap().cmc[0];
    let rb: Vec<f64> = (0..DRAWS)
        .map(|s| rbpf_step(&ps, &sys, &y, &Identity(1), &never, &mut RngStream::new(100 + s)).unwrap().crude[0])
        .collect();
    check("rbpf", &rb, target);

    let general = two_mode(0.8).to_semilinear().unwrap();
    let cloud: Vec<HybridParticle> = [-1.0, 0.3, 0.9, 2.2]
        .iter()
        .zip([0.1, 0.4, 0.3, 0.2])
        .enumerate()
        .map(|(i, (x, w))| HybridParticle {
            weight: w,
            mode: i % 2,
            state: v1(*x),
        })
        .collect();
    let y = v1(1.1);
    let outs: Vec<_> = (0..DRAWS)
        .map(|s| general_jmss_step_all(&cloud, &general, &y, &Identity(1), &never, &mut RngStream::new(s)).unwrap())
        .collect();
    // Conditioning on (x, r) gives a deterministic value; on x alone a
    // random one whose mean is that value.
    let target = outs[0].cmc_xn_rn[0];
    let crude: Vec<f64> = outs.iter().map(|o| o.crude[0]).collect();
    let xn: Vec<f64> = outs.iter().map(|o| o.cmc_xn[0]).collect();
    check("general crude vs cmc(x,r)", &crude, target);
    check("general cmc(x) vs cmc(x,r)", &xn, target);
    let (cx, _) = mean_se(&xn);
    check("general crude vs cmc(x)", &crude, cx);
    report(2, pass, &lines.join("; "));
}

#[test]
fn criterion_03_linear_reproduction() {
    let cfg = quick("linear.json");
    let res = run_experiment(&cfg).unwrap();
    let crude_sir = avg_mse(&res, "sir/crude/1000");
    let cmc_sir1 = avg_mse(&res, "sir/cmc/1000");
    let crude_fa = avg_mse(&res, "fa/crude/1000");
    let cmc_sir2 = avg_mse(&res, "fa/cmc_sir/1000");
    let kalman = avg_mse(&res, "kalman");

    // Against the hidden state the Kalman excess of an estimator is its MSE
    // against the reference plus a zero-mean cross term whose noise at this P
    // exceeds the CMC excess, so these numbers are reported, not compared.
    let mut truth_cfg = cfg.clone();
    if let Scenario::Single(s) = &mut truth_cfg.scenario {
        s.mse_against = ErrorTarget::Truth;
    }
    let vs_truth = run_experiment(&truth_cfg).unwrap();
    let k_truth = avg_mse(&vs_truth, "kalman");
    let min_other_truth = vs_truth
        .estimators()
        .iter()
        .filter(|e| *e != "kalman")
        .map(|e| avg_mse(&vs_truth, e))
        .fold(f64::INFINITY, f64::min);

    let pass = cmc_sir1 < crude_sir
        && cmc_sir2 < crude_fa
        && cmc_sir2 < cmc_sir1
        && [crude_sir, cmc_sir1, crude_fa, cmc_sir2].iter().all(|m| kalman < *m);
    report(
        3,
        pass,
        &format!(
            "crude-SIR {crude_sir:.3e}, CMC-SIR-1 {cmc_sir1:.3e}, crude-FA {crude_fa:.3e}, CMC-SIR-2 {cmc_sir2:.3e}, \
             kalman {kalman:.1e}; against the state: kalman {k_truth:.6}, best particle estimator {min_other_truth:.6}"
        ),
    );
}

#[test]
fn criterion_04_arch_small_cmc_beats_large_crude() {
    let res = run_experiment(&quick("arch.json")).unwrap();
    let crude = avg_mse(&res, "fa/crude/1000");
    let cmc100 = avg_mse(&res, "fa/cmc_sir/100");
    let cmc1000 = avg_mse(&res, "fa/cmc_sir/1000");
    report(
        4,
        cmc100 <= crude,
        &format!("CMC N=100 {cmc100:.3e} <= crude N=1000 {crude:.3e} (CMC N=1000 {cmc1000:.3e})"),
    );
}

#[test]
fn criterion_05_stochastic_volatility() {
    let small = run_experiment(&quick("sv_018.json")).unwrap();
    let large = run_experiment(&quick("sv_04.json")).unwrap();
    let get = |r: &RunResult, o: &str| avg_mse(r, &format!("approx/{o}/1000"));
    let (c1, k1, p1) = (get(&small, "crude"), get(&small, "cmc_kernel"), get(&small, "cmc_predictive"));
    let (c2, k2, p2) = (get(&large, "crude"), get(&large, "cmc_kernel"), get(&large, "cmc_predictive"));
    let pass = k1 < c1 && p1 < c1 && k2 < c2 && p2 >= c2;
    report(
        5,
        pass,
        &format!(
            "sigma 0.18: crude {c1:.3e}, kernel {k1:.3e}, predictive {p1:.3e}; \
             sigma 0.4: crude {c2:.3e}, kernel {k2:.3e}, predictive {p2:.3e}"
        ),
    );
}

/// Time-averaged efficiency of an estimator: mean over steps of `Eff(n)`.
fn avg_eff(res: &RunResult, est: &str) -> f64 {
    res.time_average(est, 1, |r| r.efficiency).unwrap()
}

#[test]
fn criterion_06_jmss_efficiency() {
    let mut gaps = Vec::new();
    let mut detail = Vec::new();
    let mut better = true;
    for name in ["jmss_a.json", "jmss_b.json"] {
        let cfg = preset(name);
        assert_eq!(cfg.timing, TimingMode::Measured);
        let res = run_experiment(&cfg).unwrap();
        let crude = avg_eff(&res, "rbpf/crude");
        let cmc = avg_eff(&res, "rbpf/cmc");
        better &= cmc > crude;
        gaps.push(cmc / crude);
        detail.push(format!(
            "{}: Eff crude {crude:.3e}, cmc {cmc:.3e}, ratio {:.2}",
            cfg.name,
            cmc / crude
        ));
    }
    // The first preset has near-uniform transitions, the second dispersed ones.
    report(6, better && gaps[0] > gaps[1], &detail.join("; "));
}

fn scalar_params(p_d: f64, birth: GaussianMixture) -> PhdModelParams<LinearGaussianModel> {
    PhdModelParams {
        p_d,
        survival: Survival::Constant(0.98),
        clutter: UniformClutter::new(10.0, v1(-50.0), v1(50.0)).unwrap(),
        birth,
        model: LinearGaussianModel::scalar(0.9, 1.0, 1.0).unwrap(),
    }
}

fn phd_cloud(seed: u64, n: usize, mass: f64) -> PhdParticleSet {
    let mut rng = RngStream::new(seed);
    PhdParticleSet::new(
        (0..n).map(|_| v1(2.0 * rng.standard_normal() - 3.0)).collect(),
        vec![mass / n as f64; n],
    )
    .unwrap()
}

#[test]
fn criterion_07_phd_identities() {
    let birth = GaussianMixture::new(vec![(0.3, GaussianBelief::scalar(2.0, 9.0).unwrap())]).unwrap();
    let cloud = CmcCloud::new(200, ResampleScheme::Systematic);
    let zs = [v1(-4.0), v1(-2.9), v1(0.0), v1(3.5), v1(40.0)];

    // p_d = 0: measurements carry no information and mass only survives.
    let blind = scalar_params(0.0, birth.clone());
    let set = phd_cloud(1, 100, 2.7);
    let smc = smc_phd_step(&set, &PhdParticleSet::empty(), &blind, &zs, &mut RngStream::new(2)).unwrap();
    let b = sample_birth(&blind, &zs, 20, BirthPlacement::AroundMeasurements, &mut RngStream::new(5)).unwrap();
    let cmc = cmc_phd_step(&CmcPhdState::new(set.clone()), b.clone(), &blind, &zs, false, None, cloud, &mut RngStream::new(3)).unwrap();
    let smc_err = (smc.set.total_mass() - 0.98 * 2.7).abs();
    let cmc_err = (cmc.count - (0.98 * 2.7 + b.total_mass())).abs();
    let balance_ok = smc_err < 1e-12 && cmc_err < 1e-12;

    let params = scalar_params(0.95, birth);
    let state = CmcPhdState::new(phd_cloud(9, 300, 2.4));
    let b = sample_birth(&params, &zs, 20, BirthPlacement::AroundMeasurements, &mut RngStream::new(10)).unwrap();
    let out = cmc_phd_step(&state, b, &params, &zs, false, None, cloud, &mut RngStream::new(3)).unwrap();
    let t = out.state.last_tables.as_ref().unwrap();
    let mut id_err: f64 = 0.0;
    for k in 0..zs.len() {
        let lhs: f64 = t.w3[k].iter().sum::<f64>() + t.w4[k].iter().sum::<f64>();
        let bt = t.log_b[k].exp();
        id_err = id_err.max((lhs - (bt - t.clutter[k]) / bt).abs());
    }
    let identity_ok = id_err < 1e-12;

    let draws: Vec<f64> = (0..10_000)
        .map(|s| crude_phd_count(&state, t, &params, &zs, &mut RngStream::new(s)).unwrap())
        .collect();
    let (tower_ok, tower) = within_3se(&draws, out.count);
    report(
        7,
        balance_ok && identity_ok && tower_ok,
        &format!(
            "mass balance err smc {smc_err:.1e} cmc {cmc_err:.1e}; identity err {id_err:.1e}; count tower {tower}"
        ),
    );
}

#[test]
fn criterion_08_phd_sharp_likelihood() {
    let cfg = quick("phd.json");
    let res = run_experiment(&cfg).unwrap();
    let last_third = cfg.horizon - cfg.horizon / 3;
    let ospa = |e: &str| res.time_average(e, 0, |r| r.ospa_mean).unwrap();
    let sd = |e: &str| res.time_average(e, last_third, |r| r.count_sd).unwrap();
    let (o_smc, o_cmc, o_gm) = (ospa("smc"), ospa("cmc"), ospa("gm"));
    let (s_cmc, s_gm) = (sd("cmc"), sd("gm"));
    let checks = [o_cmc < o_smc, o_cmc <= o_gm, s_cmc <= s_gm];
    report(
        8,
        checks.iter().all(|c| *c),
        &format!(
            "OSPA smc {o_smc:.3}, cmc {o_cmc:.3}, gm {o_gm:.3}; count SD over steps >= {last_third}: \
             cmc {s_cmc:.3}, gm {s_gm:.3}; checks [cmc<smc, cmc<=gm, sd cmc<=gm] = {checks:?}"
        ),
    );
}

fn pt(x: f64, y: f64) -> Vector {
    Vector::from_vec(vec![x, y])
}

#[test]
fn criterion_09_ospa() {
    let prm = OspaParams { p: 1.0, c: 10.0 };
    let examples = ospa(&[pt(3.0, -1.0)], &[pt(3.0, -1.0)], &prm) == 0.0
        && ospa(&[], &[pt(1.0, 1.0)], &prm) == 10.0
        && ospa(&[pt(1.0, 1.0)], &[], &prm) == 10.0
        && ospa(&[pt(0.0, 0.0)], &[pt(3.0, 4.0), pt(100.0, 100.0)], &prm) == 7.5;

    let mut rng = RngStream::new(42);
    let set = |rng: &mut RngStream| -> Vec<Vector> {
        let n = (rng.uniform() * 6.0) as usize;
        (0..n).map(|_| pt(20.0 * rng.uniform() - 10.0, 20.0 * rng.uniform() - 10.0)).collect()
    };
    let mut worst: f64 = 0.0;
    let mut triangle_ok = true;
    for i in 0..2000 {
        let prm = OspaParams {
            p: [1.0, 2.0, 3.0][i % 3],
            c: 1.0 + 20.0 * rng.uniform(),
        };
        let (x, y, z) = (set(&mut rng), set(&mut rng), set(&mut rng));
        let dxy = ospa(&x, &y, &prm);
        worst = worst.max((dxy - ospa(&y, &x, &prm)).abs());
        worst = worst.max((dxy - ospa_brute_force(&x, &y, &prm)).abs());
        triangle_ok &= dxy <= ospa(&x, &z, &prm) + ospa(&z, &y, &prm) + 1e-12;
    }
    report(
        9,
        examples && worst < 1e-12 && triangle_ok,
        &format!("examples {examples}, symmetry/optimality err {worst:.1e}, triangle {triangle_ok}"),
    );
}

fn files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            let bytes = std::fs::read(&p).unwrap();
            (PathBuf::from(p.file_name().unwrap()), bytes)
        })
        .collect();
    v.sort();
    v
}

#[test]
fn criterion_10_determinism() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut names: Vec<String> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    let mut mismatched = Vec::new();
    for name in &names {
        let mut cfg = quick(name);
        cfg.seeds = Some(vec![1, 2]);
        let tmp = tempfile::tempdir().unwrap();
        let mut outputs = Vec::new();
        for attempt in 0..2 {
            let out = tmp.path().join(format!("run{attempt}"));
            let res = run_experiment(&cfg).unwrap();
            for format in [OutputFormat::Csv, OutputFormat::Json] {
                emit_results(&res, format, &out).unwrap();
            }
            outputs.push(files(&out));
        }
        if outputs[0] != outputs[1] || outputs[0].len() != 3 {
            mismatched.push(name.clone());
        }
    }
    report(
        10,
        mismatched.is_empty(),
        &format!("{} presets rerun; mismatched: {mismatched:?}", names.len()),
    );
}

use std::f64::consts::PI;

use seqcmc_core::filter::{bootstrap_step, sir_step, FilterState};
use seqcmc_core::jmss::{
    general_jmss_step_all, jmss_is_marginal_step, jmss_mixture_proposal_step,
    mixture_proposal_weights, rbpf_init, rbpf_propagate, rbpf_step, HybridParticle, JumpParticle,
    JumpProposal, OptimalJumpProposal, TransitionJumpProposal,
};
use seqcmc_core::models::{
    Constant, Identity, LinearGaussianModel, LinearJmss, LinearMode, ModeChain, SemiLinearJmss,
    StateSpaceModel,
};
use seqcmc_core::{
    GaussianBelief, Matrix, ResamplePolicy, RngStream, Vector, WeightedParticleSet,
};

fn v1(x: f64) -> Vector {
    Vector::from_element(1, x)
}

fn m1(x: f64) -> Matrix {
    Matrix::from_element(1, 1, x)
}

fn normal_pdf(x: f64, m: f64, v: f64) -> f64 {
    (-(x - m) * (x - m) / (2.0 * v)).exp() / (2.0 * PI * v).sqrt()
}

fn planar_mode() -> LinearMode {
    LinearMode {
        f: Matrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]),
        g: Matrix::from_row_slice(2, 1, &[0.5, 1.0]),
        h: Matrix::from_row_slice(1, 2, &[1.0, 0.0]),
        l: m1(1.0),
    }
}

fn planar_prior() -> GaussianBelief {
    GaussianBelief::new(
        Vector::from_vec(vec![0.0, 1.0]),
        Matrix::from_row_slice(2, 2, &[4.0, 0.5, 0.5, 1.0]),
    )
    .unwrap()
}

fn planar_jmss(k: usize) -> LinearJmss {
    LinearJmss::new(
        vec![planar_mode(); k],
        m1(0.3),
        m1(2.0),
        ModeChain::symmetric(k, if k == 1 { 1.0 } else { 0.7 }).unwrap(),
        planar_prior(),
    )
    .unwrap()
}

/// Textbook covariance-form Kalman filter.
fn kalman_means(ys: &[f64]) -> Vec<Vector> {
    let md = planar_mode();
    let q = &md.g * m1(0.3) * md.g.transpose();
    let r = 2.0;
    let (mut m, mut p) = (planar_prior().mean().clone(), planar_prior().cov().clone());
    ys.iter()
        .map(|y| {
            let mp = &md.f * &m;
            let pp = &md.f * &p * md.f.transpose() + &q;
            let s = (&md.h * &pp * md.h.transpose())[(0, 0)] + r;
            let k = &pp * md.h.transpose() / s;
            m = &mp + &k * (y - (&md.h * &mp)[0]);
            p = (Matrix::identity(2, 2) - &k * &md.h) * pp;
            m.clone()
        })
        .collect()
}

fn simulate_planar(steps: usize, seed: u64) -> Vec<f64> {
    let sys = planar_jmss(1);
    let mut rng = RngStream::new(seed);
    let mut x = planar_prior().sample(&mut rng);
    (0..steps)
        .map(|_| {
            x = sys.sample_transition(&x, 0, &mut rng);
            sys.sample_observation(&x, 0, &mut rng)[0]
        })
        .collect()
}

fn check_rbpf_is_kalman(sys: &LinearJmss) {
    let ys = simulate_planar(30, 4);
    let truth = kalman_means(&ys);
    let mut rng = RngStream::new(1);
    let mut ps = rbpf_init(sys, 20, &mut rng);
    let policy = ResamplePolicy::default();
    for (y, t) in ys.iter().zip(&truth) {
        let out = rbpf_step(&ps, sys, &v1(*y), &Identity(2), &policy, &mut rng).unwrap();
        assert!((&out.cmc - t).amax() < 1e-9);
        assert!((&out.crude - t).amax() < 1e-9);
        ps = out.particles;
    }
}

#[test]
fn single_mode_rbpf_is_kalman() {
    check_rbpf_is_kalman(&planar_jmss(1));
}

#[test]
fn identical_modes_rbpf_is_kalman() {
    check_rbpf_is_kalman(&planar_jmss(3));
}

#[test]
fn identical_modes_keep_prior_row() {
    let sys = planar_jmss(3);
    let mut rng = RngStream::new(2);
    let ps = rbpf_init(&sys, 10, &mut rng);
    let prop = rbpf_propagate(&ps, &sys, &v1(3.3)).unwrap();
    for (p, post) in ps.iter().zip(&prop.mode_post) {
        for (r, pr) in post.iter().enumerate() {
            assert!((pr - sys.chain().prob(p.mode, r)).abs() < 1e-12);
        }
    }
}

fn two_mode_scalar(stay: f64) -> LinearJmss {
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
fn two_mode_conditional_estimate_by_enumeration() {
    let sys = two_mode_scalar(0.5);
    let ps = vec![JumpParticle {
        weight: 1.0,
        mode: 0,
        belief: GaussianBelief::scalar(0.2, 1.0).unwrap(),
    }];
    let y = 1.0;
    let mut num = 0.0;
    let mut den = 0.0;
    for a in [0.5, 1.5] {
        let (mp, pp) = (a * 0.2, a * a + 1.0);
        let s = pp + 0.5;
        let lik = 0.5 * normal_pdf(y, mp, s);
        num += lik * (mp + pp / s * (y - mp));
        den += lik;
    }
    let out = rbpf_step(&ps, &sys, &v1(y), &Identity(1), &ResamplePolicy::never(), &mut RngStream::new(0)).unwrap();
    assert!((out.cmc[0] - num / den).abs() < 1e-12);
}

#[test]
fn mode_posteriors_sum_to_one() {
    let sys = two_mode_scalar(0.9);
    let mut rng = RngStream::new(3);
    let ps = rbpf_init(&sys, 50, &mut rng);
    let prop = rbpf_propagate(&ps, &sys, &v1(-2.0)).unwrap();
    for row in &prop.mode_post {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn rbpf_crude_averages_to_conditional_estimate() {
    let sys = two_mode_scalar(0.6);
    let mut rng = RngStream::new(8);
    let ps = rbpf_init(&sys, 5, &mut rng);
    let y = v1(1.4);
    let policy = ResamplePolicy::never();
    let cmc = rbpf_step(&ps, &sys, &y, &Identity(1), &policy, &mut RngStream::new(0)).unwrap().cmc[0];
    let draws: Vec<f64> = (0..10_000)
        .map(|s| rbpf_step(&ps, &sys, &y, &Identity(1), &policy, &mut RngStream::new(100 + s)).unwrap().crude[0])
        .collect();
    let (m, se) = mean_se(&draws);
    assert!((m - cmc).abs() < 3.0 * se, "{m} vs {cmc} ± {se}");
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

fn hybrid_cloud() -> Vec<HybridParticle> {
    let xs = [-1.0, 0.3, 0.9, 2.2];
    let ws = [0.1, 0.4, 0.3, 0.2];
    xs.iter()
        .zip(ws)
        .enumerate()
        .map(|(i, (x, w))| HybridParticle {
            weight: w,
            mode: i % 2,
            state: v1(*x),
        })
        .collect()
}

fn general_two_mode() -> SemiLinearJmss<LinearGaussianModel> {
    two_mode_scalar(0.8).to_semilinear().unwrap()
}

#[test]
fn mode_marginal_rows_sum_to_particle_weight() {
    let sys = general_two_mode();
    let cloud = hybrid_cloud();
    let y = 0.7;
    let raw: Vec<f64> = cloud
        .iter()
        .map(|p| {
            [0.5, 1.5]
                .iter()
                .enumerate()
                .map(|(r, a)| {
                    let pr = if r == p.mode { 0.8 } else { 0.2 };
                    p.weight * pr * normal_pdf(y, a * p.state[0], 1.5)
                })
                .sum::<f64>()
        })
        .collect();
    let z: f64 = raw.iter().sum();
    let out = general_jmss_step_all(&cloud, &sys, &v1(y), &Identity(1), &ResamplePolicy::never(), &mut RngStream::new(1)).unwrap();
    for (i, w) in raw.iter().enumerate() {
        assert!((out.mode_weights.row_sum(i) - w / z).abs() < 1e-12);
    }
}

#[test]
fn constant_moment_makes_estimators_agree() {
    let sys = general_two_mode();
    let c = Constant(Vector::from_vec(vec![4.0]));
    let out = general_jmss_step_all(&hybrid_cloud(), &sys, &v1(0.1), &c, &ResamplePolicy::never(), &mut RngStream::new(5)).unwrap();
    assert!((out.crude[0] - 4.0).abs() < 1e-12);
    assert!((out.cmc_xn[0] - 4.0).abs() < 1e-12);
    assert!((out.cmc_xn_rn[0] - 4.0).abs() < 1e-12);
}

#[test]
fn single_mode_general_is_sir() {
    let m = LinearGaussianModel::scalar(0.9, 10.0, 1.0).unwrap();
    let sys = SemiLinearJmss::new(vec![m.clone()], ModeChain::symmetric(1, 1.0).unwrap()).unwrap();
    let cloud: Vec<HybridParticle> = hybrid_cloud().into_iter().map(|p| HybridParticle { mode: 0, ..p }).collect();
    let st = FilterState::new(
        WeightedParticleSet::new(
            cloud.iter().map(|p| p.state.clone()).collect(),
            cloud.iter().map(|p| p.weight).collect(),
        )
        .unwrap(),
    );
    let y = v1(2.0);
    let (_, sir) = sir_step(&st, &m, &y, &Identity(1), &ResamplePolicy::never(), &mut RngStream::new(0)).unwrap();
    let out = general_jmss_step_all(&cloud, &sys, &y, &Identity(1), &ResamplePolicy::never(), &mut RngStream::new(0)).unwrap();
    let target = sir.cmc.unwrap()[0];
    assert!((out.cmc_xn[0] - target).abs() < 1e-12);
    assert!((out.cmc_xn_rn[0] - target).abs() < 1e-12);
}

fn var(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
}

#[test]
fn tower_property_over_redraws() {
    let sys = general_two_mode();
    let cloud = hybrid_cloud();
    let y = v1(1.1);
    let policy = ResamplePolicy::never();
    let outs: Vec<_> = (0..10_000)
        .map(|s| general_jmss_step_all(&cloud, &sys, &y, &Identity(1), &policy, &mut RngStream::new(s)).unwrap())
        .collect();
    let target = outs[0].cmc_xn_rn[0];
    let xn: Vec<f64> = outs.iter().map(|o| o.cmc_xn[0]).collect();
    let crude: Vec<f64> = outs.iter().map(|o| o.crude[0]).collect();
    let (m, se) = mean_se(&xn);
    assert!((m - target).abs() < 3.0 * se, "cmc_xn {m} vs {target} ± {se}");
    let (m, se) = mean_se(&crude);
    assert!((m - target).abs() < 3.0 * se, "crude {m} vs {target} ± {se}");
    assert!(outs.iter().all(|o| o.cmc_xn_rn[0] == target));
    assert!(var(&xn) <= var(&crude));
}

#[test]
fn marginal_is_with_optimal_kernels_is_unbiased_for_cmc() {
    let sys = general_two_mode();
    let cloud = hybrid_cloud();
    let y = v1(-0.6);
    let policy = ResamplePolicy::never();
    let target = general_jmss_step_all(&cloud, &sys, &y, &Identity(1), &policy, &mut RngStream::new(0))
        .unwrap()
        .cmc_xn_rn[0];
    let q = OptimalJumpProposal(&sys);
    let draws: Vec<f64> = (0..10_000)
        .map(|s| jmss_is_marginal_step(&cloud, &sys, &y, &Identity(1), &q, &policy, &mut RngStream::new(s)).unwrap().1[0])
        .collect();
    let (m, se) = mean_se(&draws);
    assert!((m - target).abs() < 3.0 * se, "{m} vs {target} ± {se}");
}

#[test]
fn marginal_is_single_mode_is_bootstrap() {
    let m = LinearGaussianModel::scalar(0.9, 2.0, 1.0).unwrap();
    let sys = SemiLinearJmss::new(vec![m.clone()], ModeChain::symmetric(1, 1.0).unwrap()).unwrap();
    let cloud: Vec<HybridParticle> = hybrid_cloud().into_iter().map(|p| HybridParticle { mode: 0, ..p }).collect();
    let st = FilterState::new(
        WeightedParticleSet::new(
            cloud.iter().map(|p| p.state.clone()).collect(),
            cloud.iter().map(|p| p.weight).collect(),
        )
        .unwrap(),
    );
    let y = v1(0.4);
    let (_, boot) = bootstrap_step(&st, &m, &y, &Identity(1), &ResamplePolicy::never(), &mut RngStream::new(3)).unwrap();
    let (_, est) = jmss_is_marginal_step(&cloud, &sys, &y, &Identity(1), &TransitionJumpProposal(&sys), &ResamplePolicy::never(), &mut RngStream::new(3)).unwrap();
    assert!((est[0] - boot.crude[0]).abs() < 1e-12);
}

#[test]
fn marginal_is_constant_moment_is_exact() {
    let sys = general_two_mode();
    let c = Constant(Vector::from_vec(vec![-2.0]));
    let (_, est) = jmss_is_marginal_step(&hybrid_cloud(), &sys, &v1(9.0), &c, &TransitionJumpProposal(&sys), &ResamplePolicy::never(), &mut RngStream::new(1)).unwrap();
    assert!((est[0] + 2.0).abs() < 1e-12);
}

#[test]
fn mixture_weights_single_mode_are_plain() {
    let m = LinearGaussianModel::scalar(0.9, 2.0, 1.0).unwrap();
    let sys = SemiLinearJmss::new(vec![m], ModeChain::symmetric(1, 1.0).unwrap()).unwrap();
    let cloud: Vec<HybridParticle> = hybrid_cloud().into_iter().map(|p| HybridParticle { mode: 0, ..p }).collect();
    let d = mixture_proposal_weights(&cloud, &sys, &v1(0.4), &TransitionJumpProposal(&sys), &mut RngStream::new(2)).unwrap();
    for (a, b) in d.log_plain.iter().zip(&d.log_mixture) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn mixture_weights_have_lower_variance() {
    let sys = general_two_mode();
    let cloud = vec![HybridParticle {
        weight: 1.0,
        mode: 0,
        state: v1(0.5),
    }];
    let y = v1(1.8);
    let (mut plain, mut mix) = (Vec::new(), Vec::new());
    for s in 0..500 {
        let d = mixture_proposal_weights(&cloud, &sys, &y, &TransitionJumpProposal(&sys), &mut RngStream::new(s)).unwrap();
        plain.push(d.log_plain[0].exp());
        mix.push(d.log_mixture[0].exp());
    }
    assert!(var(&mix) <= var(&plain), "{} vs {}", var(&mix), var(&plain));
}

/// Always proposes mode 1 with its prior transition.
struct PinnedMode<'a>(&'a SemiLinearJmss<LinearGaussianModel>);

impl JumpProposal for PinnedMode<'_> {
    fn mode_probs(&self, _x: &Vector, _r: usize, _y: &Vector) -> seqcmc_core::Result<Vec<f64>> {
        Ok(vec![0.0, 1.0])
    }

    fn sample_state(&self, x: &Vector, r: usize, _rp: usize, _y: &Vector, rng: &mut RngStream) -> seqcmc_core::Result<Vector> {
        Ok(self.0.mode(r).sample_transition(x, rng))
    }

    fn state_log_density(&self, x: &Vector, xp: &Vector, r: usize, _rp: usize, _y: &Vector) -> f64 {
        self.0.mode(r).transition_logdensity(x, xp)
    }
}

#[test]
fn point_mass_mode_proposal_is_plain_is() {
    let sys = general_two_mode();
    let cloud = hybrid_cloud();
    let y = v1(0.9);
    let d = mixture_proposal_weights(&cloud, &sys, &y, &PinnedMode(&sys), &mut RngStream::new(6)).unwrap();
    assert!(d.modes.iter().all(|r| *r == 1));
    for (a, b) in d.log_plain.iter().zip(&d.log_mixture) {
        assert!((a - b).abs() < 1e-12);
    }
    // Plain IS with the mode fixed: w p(1|r') g(y|x).
    for ((p, x), lw) in cloud.iter().zip(&d.states).zip(&d.log_plain) {
        let pr = if p.mode == 1 { 0.8 } else { 0.2 };
        let hand = (p.weight * pr * normal_pdf(y[0], x[0], 0.5)).ln();
        assert!((lw - hand).abs() < 1e-12);
    }
    let (_, est) = jmss_mixture_proposal_step(&cloud, &sys, &y, &Identity(1), &PinnedMode(&sys), &ResamplePolicy::never(), &mut RngStream::new(6)).unwrap();
    let w: Vec<f64> = d.log_plain.iter().map(|l| l.exp()).collect();
    let z: f64 = w.iter().sum();
    let hand: f64 = w.iter().zip(&d.states).map(|(w, x)| w / z * x[0]).sum();
    assert!((est[0] - hand).abs() < 1e-12);
}

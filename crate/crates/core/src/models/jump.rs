use alloc::vec::Vec;

use super::linear::LinearGaussianModel;
use super::semilinear::SemiLinearGaussian;
use crate::error::{check_dim, Error, Result};
use crate::gaussian::GaussianBelief;
use crate::linalg::{psd_factor, Matrix, Vector};
use crate::rng::RngStream;

const STOCHASTIC_TOL: f64 = 1e-12;

/// Markov chain over `K` modes: row-stochastic transition and initial law.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeChain {
    rows: Vec<Vec<f64>>,
    initial: Vec<f64>,
}

impl ModeChain {
    pub fn new(rows: Vec<Vec<f64>>, initial: Vec<f64>) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(Error::InvalidParameter("mode chain needs at least one mode"));
        }
        for (i, row) in rows.iter().enumerate() {
            check_dim("mode transition row", k, row.len())?;
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::TransitionNotStochastic { row: i, sum });
            }
        }
        check_dim("initial mode law", k, initial.len())?;
        let s: f64 = initial.iter().sum();
        if initial.iter().any(|p| !(*p >= 0.0)) || (s - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidParameter("initial mode law must sum to one"));
        }
        Ok(Self { rows, initial })
    }

    /// Transition rows with a uniform initial law.
    pub fn with_uniform_initial(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.len().max(1);
        Self::new(rows, alloc::vec![1.0 / k as f64; k])
    }

    /// `stay` on the diagonal, the remainder spread evenly.
    pub fn symmetric(k: usize, stay: f64) -> Result<Self> {
        if k == 1 {
            return Self::with_uniform_initial(alloc::vec![alloc::vec![1.0]]);
        }
        let off = (1.0 - stay) / (k - 1) as f64;
        let rows = (0..k)
            .map(|i| (0..k).map(|j| if i == j { stay } else { off }).collect())
            .collect();
        Self::with_uniform_initial(rows)
    }

    pub fn n_modes(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.rows[from]
    }

    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.rows[from][to]
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn sample_initial(&self, rng: &mut RngStream) -> usize {
        rng.categorical(&self.initial)
    }

    pub fn sample_next(&self, from: usize, rng: &mut RngStream) -> usize {
        rng.categorical(&self.rows[from])
    }
}

/// Per-mode matrices of a conditionally linear-Gaussian jump system:
/// `Xₙ = F(r) Xₙ₋₁ + G(r) Uₙ`, `Yₙ = H(r) Xₙ + L(r) Vₙ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMode {
    pub f: Matrix,
    pub g: Matrix,
    pub h: Matrix,
    pub l: Matrix,
}

/// Linear-Gaussian jump Markov system with shared noise covariances
/// `Uₙ ~ N(0, Q)`, `Vₙ ~ N(0, R)`.
#[derive(Debug, Clone)]
pub struct LinearJmss {
    modes: Vec<LinearMode>,
    chain: ModeChain,
    initial: GaussianBelief,
    q: Matrix,
    r: Matrix,
    process_cov: Vec<Matrix>,
    process_factor: Vec<Matrix>,
    obs_cov: Vec<Matrix>,
    obs_factor: Vec<Matrix>,
}

impl LinearJmss {
    pub fn new(
        modes: Vec<LinearMode>,
        q: Matrix,
        r: Matrix,
        chain: ModeChain,
        initial: GaussianBelief,
    ) -> Result<Self> {
        check_dim("mode count", chain.n_modes(), modes.len())?;
        let p = initial.dim();
        let obs = modes[0].h.nrows();
        for m in &modes {
            check_dim("F rows", p, m.f.nrows())?;
            check_dim("F cols", p, m.f.ncols())?;
            check_dim("G rows", p, m.g.nrows())?;
            check_dim("G cols", q.nrows(), m.g.ncols())?;
            check_dim("H cols", p, m.h.ncols())?;
            check_dim("H rows", obs, m.h.nrows())?;
            check_dim("L rows", obs, m.l.nrows())?;
            check_dim("L cols", r.nrows(), m.l.ncols())?;
        }
        let process_cov: Vec<Matrix> = modes
            .iter()
            .map(|m| crate::linalg::condition_covariance(&m.g * &q * m.g.transpose()))
            .collect::<Result<_>>()?;
        let obs_cov: Vec<Matrix> = modes
            .iter()
            .map(|m| crate::linalg::condition_covariance(&m.l * &r * m.l.transpose()))
            .collect::<Result<_>>()?;
        Ok(Self {
            process_factor: process_cov.iter().map(psd_factor).collect(),
            obs_factor: obs_cov.iter().map(psd_factor).collect(),
            modes,
            chain,
            initial,
            q,
            r,
            process_cov,
            obs_cov,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn state_dim(&self) -> usize {
        self.initial.dim()
    }

    pub fn obs_dim(&self) -> usize {
        self.modes[0].h.nrows()
    }

    pub fn mode(&self, r: usize) -> &LinearMode {
        &self.modes[r]
    }

    pub fn chain(&self) -> &ModeChain {
        &self.chain
    }

    pub fn initial(&self) -> &GaussianBelief {
        &self.initial
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn r(&self) -> &Matrix {
        &self.r
    }

    /// `G(r) Q G(r)ᵀ`.
    pub fn process_cov(&self, r: usize) -> &Matrix {
        &self.process_cov[r]
    }

    /// `L(r) R L(r)ᵀ`.
    pub fn obs_cov(&self, r: usize) -> &Matrix {
        &self.obs_cov[r]
    }

    pub fn sample_transition(&self, x_prev: &Vector, r: usize, rng: &mut RngStream) -> Vector {
        let a = &self.process_factor[r];
        &self.modes[r].f * x_prev + a * rng.standard_normal_vector(a.ncols())
    }

    pub fn sample_observation(&self, x: &Vector, r: usize, rng: &mut RngStream) -> Vector {
        let a = &self.obs_factor[r];
        &self.modes[r].h * x + a * rng.standard_normal_vector(a.ncols())
    }

    /// The single-regime model obtained by freezing the mode at `r`.
    pub fn mode_model(&self, r: usize) -> Result<LinearGaussianModel> {
        let m = &self.modes[r];
        LinearGaussianModel::new(
            m.f.clone(),
            self.process_cov[r].clone(),
            m.h.clone(),
            self.obs_cov[r].clone(),
            self.initial.clone(),
        )
    }

    /// The same system viewed as a general jump model with semi-linear modes.
    pub fn to_semilinear(&self) -> Result<SemiLinearJmss<LinearGaussianModel>> {
        let modes = (0..self.n_modes())
            .map(|r| self.mode_model(r))
            .collect::<Result<Vec<_>>>()?;
        SemiLinearJmss::new(modes, self.chain.clone())
    }
}

/// Jump Markov system whose per-mode dynamics are semi-linear Gaussian.
#[derive(Debug, Clone)]
pub struct SemiLinearJmss<M> {
    modes: Vec<M>,
    chain: ModeChain,
}

impl<M: SemiLinearGaussian> SemiLinearJmss<M> {
    pub fn new(modes: Vec<M>, chain: ModeChain) -> Result<Self> {
        check_dim("mode count", chain.n_modes(), modes.len())?;
        let p = modes[0].state_dim();
        for m in &modes {
            check_dim("mode state dim", p, m.state_dim())?;
        }
        Ok(Self { modes, chain })
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn mode(&self, r: usize) -> &M {
        &self.modes[r]
    }

    pub fn chain(&self) -> &ModeChain {
        &self.chain
    }

    pub fn state_dim(&self) -> usize {
        self.modes[0].state_dim()
    }

    /// Initial law of the state, taken from the first mode.
    pub fn initial(&self) -> &GaussianBelief {
        self.modes[0].initial()
    }
}

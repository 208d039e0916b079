//! Per-run outputs before aggregation.

use std::time::Instant;

use crate::config::TimingMode;

/// One estimator's per-step series within one run. Absent metrics stay
/// empty.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Series {
    pub label: String,
    pub sq_err: Vec<f64>,
    pub cost: Vec<f64>,
    pub ospa: Vec<f64>,
    pub count: Vec<f64>,
}

impl Series {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    /// Why the run was excluded, if it was.
    pub degenerate: Option<String>,
    pub series: Vec<Series>,
}

/// Times closures when timing is on; reads no clock otherwise.
#[derive(Debug, Clone, Copy)]
pub struct Stopwatch(pub TimingMode);

impl Stopwatch {
    pub fn time<T>(&self, f: impl FnOnce() -> T) -> (T, f64) {
        match self.0 {
            TimingMode::Disabled => (f(), 0.0),
            TimingMode::Measured => {
                let start = Instant::now();
                let out = f();
                (out, start.elapsed().as_secs_f64())
            }
        }
    }
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

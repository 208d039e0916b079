//! JSON scenario schema.
//!
//! A config file is one object with the common run settings and a
//! `scenario` object tagged by `kind` (`single`, `jmss` or `phd`). Unknown
//! fields are rejected so typos surface as config errors.

use std::path::Path;

use seqcmc_core::{ResamplePolicy, ResampleScheme, ResampleTrigger};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub horizon: usize,
    /// Number of repetitions P. Ignored when `seeds` is given.
    #[serde(default = "default_runs")]
    pub runs: usize,
    /// Seeds are `base_seed, base_seed + 1, ...` unless listed explicitly.
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub resampling: ResamplingConfig,
    #[serde(default)]
    pub timing: TimingMode,
    #[serde(default)]
    pub output: OutputConfig,
    pub scenario: Scenario,
}

fn default_runs() -> usize {
    200
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TimingMode {
    /// Monotone clock around each estimator; cost and efficiency columns
    /// then vary between identical runs.
    #[default]
    Measured,
    /// No clock reads; cost and efficiency columns stay empty and output is
    /// byte-reproducible.
    Disabled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub format: OutputFormat,
    /// Used when the CLI gets no `--out`.
    #[serde(default)]
    pub dir: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    #[default]
    Multinomial,
    Systematic,
}

impl From<SchemeName> for ResampleScheme {
    fn from(s: SchemeName) -> Self {
        match s {
            SchemeName::Multinomial => ResampleScheme::Multinomial,
            SchemeName::Systematic => ResampleScheme::Systematic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResamplingConfig {
    #[serde(default)]
    pub scheme: SchemeName,
    /// Resample when ESS < `ess_fraction · N`; 1 means always, 0 never.
    #[serde(default = "default_ess_fraction")]
    pub ess_fraction: f64,
}

fn default_ess_fraction() -> f64 {
    0.5
}

impl Default for ResamplingConfig {
    fn default() -> Self {
        Self {
            scheme: SchemeName::default(),
            ess_fraction: default_ess_fraction(),
        }
    }
}

impl ResamplingConfig {
    pub fn policy(&self) -> ResamplePolicy {
        let trigger = if self.ess_fraction >= 1.0 {
            ResampleTrigger::Always
        } else if self.ess_fraction <= 0.0 {
            ResampleTrigger::Never
        } else {
            ResampleTrigger::EssBelow(self.ess_fraction)
        };
        ResamplePolicy {
            scheme: self.scheme.into(),
            trigger,
        }
    }

    pub fn describe(&self) -> String {
        let trigger = if self.ess_fraction >= 1.0 {
            "every step".to_string()
        } else if self.ess_fraction <= 0.0 {
            "never".to_string()
        } else {
            format!("when ESS < {} N", self.ess_fraction)
        };
        format!("{:?} resampling {}", self.scheme, trigger).to_lowercase()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    Single(SingleScenario),
    Jmss(JmssScenario),
    Phd(PhdScenario),
}

impl Scenario {
    pub fn kind(&self) -> &'static str {
        match self {
            Scenario::Single(_) => "single",
            Scenario::Jmss(_) => "jmss",
            Scenario::Phd(_) => "phd",
        }
    }
}

// ---------------------------------------------------------------- single

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SingleModel {
    /// `xₙ = a xₙ₋₁ + √q u`, `yₙ = xₙ + √r v`.
    Linear { a: f64, q: f64, r: f64 },
    Arch { beta0: f64, beta1: f64, r: f64 },
    /// `xₙ = φ xₙ₋₁ + σ u`, `yₙ = β exp(xₙ/2) v`.
    Sv {
        phi: f64,
        sigma: f64,
        beta: f64,
        #[serde(default)]
        kernel_moments: SvKernelMoments,
    },
}

/// Where the approximate SV kernel takes its mean and variance from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SvKernelMoments {
    /// Linearized observation density.
    #[default]
    Taylor,
    /// Gauss-Hermite quadrature of the exact kernel.
    Quadrature,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarPrior {
    pub mean: f64,
    pub var: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MomentName {
    #[default]
    Identity,
    /// `β₀ + β₁ x²` (ARCH only).
    ArchVariance,
    /// `β exp(x/2)` (SV only).
    ScaledExpHalf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingleFilter {
    /// Exact Kalman mean (linear model only).
    Kalman,
    /// Optimal-kernel SIR; outputs `crude`, `cmc`.
    Sir,
    /// Fully adapted; outputs `crude`, `cmc` (ancestor form), `cmc_sir`.
    Fa,
    /// Bootstrap; output `crude`.
    Bootstrap,
    /// SIR with the transition as proposal and an approximate kernel;
    /// outputs `crude`, `cmc_kernel`, `cmc_predictive`.
    Approx,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleFilterSpec {
    pub filter: SingleFilter,
    #[serde(default = "default_particles")]
    pub particles: usize,
    pub outputs: Vec<String>,
}

fn default_particles() -> usize {
    1000
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ErrorTarget {
    /// Exact Kalman mean or a large bootstrap run.
    #[default]
    Reference,
    /// `f` of the simulated hidden state.
    Truth,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleScenario {
    pub model: SingleModel,
    #[serde(default)]
    pub prior: Option<ScalarPrior>,
    #[serde(default)]
    pub moment: MomentName,
    pub filters: Vec<SingleFilterSpec>,
    #[serde(default = "default_reference_particles")]
    pub reference_particles: usize,
    #[serde(default)]
    pub mse_against: ErrorTarget,
}

fn default_reference_particles() -> usize {
    100_000
}

impl SingleFilter {
    pub fn outputs(self) -> &'static [&'static str] {
        match self {
            SingleFilter::Kalman => &["mean"],
            SingleFilter::Sir => &["crude", "cmc"],
            SingleFilter::Fa => &["crude", "cmc", "cmc_sir"],
            SingleFilter::Bootstrap => &["crude"],
            SingleFilter::Approx => &["crude", "cmc_kernel", "cmc_predictive"],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SingleFilter::Kalman => "kalman",
            SingleFilter::Sir => "sir",
            SingleFilter::Fa => "fa",
            SingleFilter::Bootstrap => "bootstrap",
            SingleFilter::Approx => "approx",
        }
    }
}

/// Row label of one estimator: `filter/output/N`, or just `kalman`.
pub fn estimator_label(filter: SingleFilter, output: &str, particles: usize) -> String {
    match filter {
        SingleFilter::Kalman => "kalman".to_string(),
        _ => format!("{}/{}/{}", filter.name(), output, particles),
    }
}

// ------------------------------------------------------------------ jmss

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JmssScenario {
    /// Turn rates in degrees per second, one per mode.
    pub turn_rates_deg: Vec<f64>,
    /// Self-transition probability; the rest is spread evenly.
    pub stay: f64,
    pub sample_period: f64,
    pub sigma_v: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub initial_mean: [f64; 4],
    pub initial_cov_diag: [f64; 4],
    #[serde(default = "default_particles")]
    pub particles: usize,
    /// Particles of the Rao-Blackwellized reference run.
    #[serde(default = "default_jmss_reference")]
    pub reference_particles: usize,
}

fn default_jmss_reference() -> usize {
    5000
}

// ------------------------------------------------------------------- phd

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub birth_step: usize,
    /// Index into `birth.sites`; the initial state is drawn from that
    /// birth component.
    pub site: usize,
    #[serde(default)]
    pub death_step: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BirthSpec {
    pub sites: Vec<[f64; 4]>,
    /// Expected number of births per site and step.
    pub weight: f64,
    pub cov_diag: [f64; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhdFilter {
    Smc,
    Cmc,
    Gm,
}

impl PhdFilter {
    pub fn name(self) -> &'static str {
        match self {
            PhdFilter::Smc => "smc",
            PhdFilter::Cmc => "cmc",
            PhdFilter::Gm => "gm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    Prior,
    AroundMeasurements,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BirthEvidence {
    ClosedForm,
    Sampled,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OspaConfig {
    pub p: f64,
    pub c: f64,
}

impl Default for OspaConfig {
    fn default() -> Self {
        Self { p: 1.0, c: 100.0 }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmConfig {
    pub prune: f64,
    pub merge: f64,
    pub max_components: usize,
}

impl Default for GmConfig {
    fn default() -> Self {
        Self {
            prune: 1e-5,
            merge: 4.0,
            max_components: 100,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhdScenario {
    pub sample_period: f64,
    pub sigma_v: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub p_d: f64,
    pub p_s: f64,
    /// Mean clutter count per scan, uniform over `region`.
    pub clutter_rate: f64,
    /// `[[x_min, x_max], [y_min, y_max]]`.
    pub region: [[f64; 2]; 2],
    pub birth: BirthSpec,
    pub targets: Vec<TargetSpec>,
    pub filters: Vec<PhdFilter>,
    /// N_b, birth particles per stratum.
    #[serde(default = "default_birth_particles")]
    pub birth_particles: usize,
    /// Particles per expected persistent target.
    #[serde(default = "default_per_target")]
    pub per_target: usize,
    #[serde(default = "default_smc_placement")]
    pub smc_birth_placement: Placement,
    #[serde(default = "default_cmc_placement")]
    pub cmc_birth_placement: Placement,
    #[serde(default = "default_evidence")]
    pub cmc_birth_evidence: BirthEvidence,
    /// Resample the CMC missed-detection draws as a separate pool.
    #[serde(default)]
    pub cmc_split_missed: bool,
    #[serde(default = "default_threshold")]
    pub extraction_threshold: f64,
    #[serde(default)]
    pub ospa: OspaConfig,
    #[serde(default)]
    pub gm: GmConfig,
}

fn default_birth_particles() -> usize {
    20
}
fn default_per_target() -> usize {
    200
}
fn default_smc_placement() -> Placement {
    Placement::AroundMeasurements
}
fn default_cmc_placement() -> Placement {
    Placement::Prior
}
fn default_evidence() -> BirthEvidence {
    BirthEvidence::ClosedForm
}
fn default_threshold() -> f64 {
    0.5
}

// ------------------------------------------------------------- loading

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// The seed list of the experiment, in aggregation order.
    pub fn seed_list(&self) -> Vec<u64> {
        match &self.seeds {
            Some(s) => s.clone(),
            None => (0..self.runs as u64).map(|i| self.base_seed + i).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.horizon < 1 {
            return invalid("horizon must be at least 1");
        }
        match &self.seeds {
            Some(s) if s.is_empty() => return invalid("seed list is empty"),
            None if self.runs < 1 => return invalid("runs must be at least 1"),
            _ => {}
        }
        if !(0.0..=1.0).contains(&self.resampling.ess_fraction) {
            return invalid("resampling.ess_fraction must lie in [0, 1]");
        }
        match &self.scenario {
            Scenario::Single(s) => s.validate(),
            Scenario::Jmss(s) => s.validate(),
            Scenario::Phd(s) => s.validate(self.horizon),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        invalid(format!("{name} must be positive"))
    }
}

fn nonnegative(name: &str, v: f64) -> Result<(), ConfigError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        invalid(format!("{name} must be nonnegative"))
    }
}

fn probability(name: &str, v: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        invalid(format!("{name} must lie in [0, 1]"))
    }
}

impl SingleScenario {
    fn validate(&self) -> Result<(), ConfigError> {
        match self.model {
            SingleModel::Linear { a, q, r } => {
                if !a.is_finite() {
                    return invalid("a must be finite");
                }
                nonnegative("q", q)?;
                positive("r", r)?;
            }
            SingleModel::Arch { beta0, beta1, r } => {
                positive("beta0", beta0)?;
                nonnegative("beta1", beta1)?;
                positive("r", r)?;
            }
            SingleModel::Sv { phi, sigma, beta, .. } => {
                if !phi.is_finite() {
                    return invalid("phi must be finite");
                }
                positive("sigma", sigma)?;
                positive("beta", beta)?;
            }
        }
        if let Some(p) = self.prior {
            nonnegative("prior.var", p.var)?;
        }
        let moment_ok = matches!(
            (self.moment, self.model),
            (MomentName::Identity, _)
                | (MomentName::ArchVariance, SingleModel::Arch { .. })
                | (MomentName::ScaledExpHalf, SingleModel::Sv { .. })
        );
        if !moment_ok {
            return invalid(format!("moment {:?} does not fit this model", self.moment));
        }
        if self.filters.is_empty() {
            return invalid("no filters selected");
        }
        let sv = matches!(self.model, SingleModel::Sv { .. });
        let linear = matches!(self.model, SingleModel::Linear { .. });
        for spec in &self.filters {
            if spec.particles < 1 {
                return invalid("particle counts must be at least 1");
            }
            match spec.filter {
                SingleFilter::Kalman if !linear => {
                    return invalid("the kalman filter needs the linear model")
                }
                SingleFilter::Sir | SingleFilter::Fa if sv => {
                    return invalid("the SV model has no exact optimal kernel; use approx")
                }
                _ => {}
            }
            if spec.outputs.is_empty() {
                return invalid(format!("filter {} selects no outputs", spec.filter.name()));
            }
            for o in &spec.outputs {
                if !spec.filter.outputs().contains(&o.as_str()) {
                    return invalid(format!(
                        "filter {} has no output {o:?} (choose from {:?})",
                        spec.filter.name(),
                        spec.filter.outputs()
                    ));
                }
            }
        }
        if !linear && self.reference_particles < 1 {
            return invalid("reference_particles must be at least 1");
        }
        Ok(())
    }
}

impl JmssScenario {
    fn validate(&self) -> Result<(), ConfigError> {
        if self.turn_rates_deg.is_empty() {
            return invalid("at least one mode is needed");
        }
        probability("stay", self.stay)?;
        if self.turn_rates_deg.len() == 1 && self.stay != 1.0 {
            return invalid("a single mode needs stay = 1");
        }
        positive("sample_period", self.sample_period)?;
        nonnegative("sigma_v", self.sigma_v)?;
        positive("sigma_x", self.sigma_x)?;
        positive("sigma_y", self.sigma_y)?;
        for v in self.initial_cov_diag {
            nonnegative("initial_cov_diag", v)?;
        }
        if self.particles < 1 || self.reference_particles < 1 {
            return invalid("particle counts must be at least 1");
        }
        Ok(())
    }
}

impl PhdScenario {
    fn validate(&self, horizon: usize) -> Result<(), ConfigError> {
        positive("sample_period", self.sample_period)?;
        nonnegative("sigma_v", self.sigma_v)?;
        positive("sigma_x", self.sigma_x)?;
        positive("sigma_y", self.sigma_y)?;
        probability("p_d", self.p_d)?;
        probability("p_s", self.p_s)?;
        nonnegative("clutter_rate", self.clutter_rate)?;
        for [lo, hi] in self.region {
            if !(hi > lo) {
                return invalid("region bounds must be increasing");
            }
        }
        if self.birth.sites.is_empty() {
            return invalid("at least one birth site is needed");
        }
        positive("birth.weight", self.birth.weight)?;
        for v in self.birth.cov_diag {
            positive("birth.cov_diag", v)?;
        }
        for t in &self.targets {
            if t.site >= self.birth.sites.len() {
                return invalid(format!("target site {} does not exist", t.site));
            }
            if t.birth_step >= horizon {
                return invalid("target born after the horizon");
            }
            if let Some(d) = t.death_step {
                if d <= t.birth_step {
                    return invalid("target dies before it is born");
                }
            }
        }
        if self.filters.is_empty() {
            return invalid("no filters selected");
        }
        if self.birth_particles < 1 || self.per_target < 1 {
            return invalid("particle counts must be at least 1");
        }
        positive("ospa.c", self.ospa.c)?;
        if !(self.ospa.p >= 1.0) {
            return invalid("ospa.p must be at least 1");
        }
        nonnegative("extraction_threshold", self.extraction_threshold)?;
        if self.gm.max_components < 1 {
            return invalid("gm.max_components must be at least 1");
        }
        Ok(())
    }
}

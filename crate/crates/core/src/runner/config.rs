use serde::{Deserialize, Serialize};

use crate::envs::EnvSpec;
use crate::humansim::Rationality;
use crate::inference::{BTConfig, Distance, MCMCConfig};
use crate::oracles::OracleConfig;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    MapleOaqs,
    MapleRandom,
    MapleTop,
    /// Flat prior, random queries, language feedback ignored.
    Brex,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::MapleOaqs, Method::MapleRandom, Method::MapleTop, Method::Brex];

    pub fn name(self) -> &'static str {
        match self {
            Method::MapleOaqs => "maple_oaqs",
            Method::MapleRandom => "maple_random",
            Method::MapleTop => "maple_top",
            Method::Brex => "brex",
        }
    }

    pub fn uses_language(self) -> bool {
        self != Method::Brex
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "maple_oaqs" => Ok(Method::MapleOaqs),
            "maple_random" => Ok(Method::MapleRandom),
            "maple_top" => Ok(Method::MapleTop),
            "brex" => Ok(Method::Brex),
            other => Err(Error::Parse(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorVariant {
    /// Distance to sampled weight vectors.
    #[default]
    SampleDistance,
    /// Per-concept intervals.
    Range,
    Flat,
}

/// Mock oracle parameters; the ground truth comes from the instruction template.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockParams {
    pub weight_noise_std: f64,
    pub y0: f64,
    pub y1: f64,
    /// Defaults to a stream derived from the session seed.
    pub seed: Option<u64>,
}

impl Default for MockParams {
    fn default() -> Self {
        Self { weight_noise_std: 0.1, y0: 1.0, y1: 1.0, seed: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleSpec {
    Mock(MockParams),
    Live(OracleConfig),
}

impl Default for OracleSpec {
    fn default() -> Self {
        OracleSpec::Mock(MockParams::default())
    }
}

/// How the simulated human decides a query is too close to call.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum SkipRule {
    Threshold(f64),
    /// Threshold calibrated on the training pool to give this answerable fraction.
    TargetAqsr(f64),
}

impl Default for SkipRule {
    fn default() -> Self {
        SkipRule::TargetAqsr(0.6)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HumanSpec {
    pub rationality: Rationality,
    pub clarification_prob: f64,
    pub skip: SkipRule,
}

impl Default for HumanSpec {
    fn default() -> Self {
        Self { rationality: Rationality::Deterministic, clarification_prob: 0.2, skip: SkipRule::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub env: EnvSpec,
    /// Template id for simulated sessions.
    #[serde(default)]
    pub instruction_id: Option<String>,
    pub method: Method,
    #[serde(default)]
    pub oracle: OracleSpec,
    pub budget: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub mcmc: MCMCConfig,
    #[serde(default)]
    pub bt: BTConfig,
    #[serde(default)]
    pub prior: PriorVariant,
    #[serde(default = "default_prior_samples")]
    pub prior_samples: usize,
    #[serde(default = "default_beta_l")]
    pub beta_l: f64,
    #[serde(default)]
    pub prior_distance: Distance,
    #[serde(default)]
    pub human: HumanSpec,
    #[serde(default = "default_cap")]
    pub candidate_cap: usize,
    #[serde(default = "default_heldout")]
    pub heldout_fraction: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_k() -> usize {
    50
}
fn default_prior_samples() -> usize {
    20
}
fn default_beta_l() -> f64 {
    5.0
}
fn default_cap() -> usize {
    2000
}
fn default_heldout() -> f64 {
    0.25
}

impl SessionConfig {
    pub fn new(env: EnvSpec, instruction_id: Option<String>, method: Method, budget: usize, seed: u64) -> Self {
        Self {
            env,
            instruction_id,
            method,
            oracle: OracleSpec::default(),
            budget,
            k: default_k(),
            mcmc: MCMCConfig::default(),
            bt: BTConfig::default(),
            prior: PriorVariant::default(),
            prior_samples: default_prior_samples(),
            beta_l: default_beta_l(),
            prior_distance: Distance::default(),
            human: HumanSpec::default(),
            candidate_cap: default_cap(),
            heldout_fraction: default_heldout(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::Contract("budget must be >= 1".into()));
        }
        if self.k == 0 || self.prior_samples == 0 || self.candidate_cap == 0 {
            return Err(Error::Contract("k, prior_samples and candidate_cap must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.heldout_fraction) {
            return Err(Error::Domain(format!("heldout_fraction {} outside [0, 1)", self.heldout_fraction)));
        }
        if !(self.beta_l.is_finite() && self.beta_l >= 0.0) {
            return Err(Error::Domain(format!("beta_l must be >= 0, got {}", self.beta_l)));
        }
        if !(0.0..=1.0).contains(&self.human.clarification_prob) {
            return Err(Error::Domain("clarification_prob outside [0, 1]".into()));
        }
        match self.human.skip {
            SkipRule::Threshold(t) if !(t.is_finite() && t > 0.0) => {
                return Err(Error::Domain(format!("skip threshold must be > 0, got {t}")))
            }
            SkipRule::TargetAqsr(a) if !(0.0 < a && a < 1.0) => {
                return Err(Error::Domain(format!("target AQSR must be in (0, 1), got {a}")))
            }
            _ => {}
        }
        self.bt.validate()?;
        self.mcmc.validate()
    }

    /// The prior actually used: B-REX always runs flat.
    pub fn effective_prior(&self) -> PriorVariant {
        if self.method == Method::Brex { PriorVariant::Flat } else { self.prior }
    }
}

/// A sweep over methods × instructions × seeds; metrics are read off each
/// session at every requested feedback count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub base: SessionConfig,
    pub methods: Vec<Method>,
    pub instructions: Vec<String>,
    pub seeds: Vec<u64>,
    pub feedback_counts: Vec<usize>,
}

impl BatchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() || self.instructions.is_empty() || self.seeds.is_empty() || self.feedback_counts.is_empty() {
            return Err(Error::Contract("batch needs at least one method, instruction, seed and feedback count".into()));
        }
        let max = self.feedback_counts.iter().copied().max().unwrap_or(0);
        if max == 0 {
            return Err(Error::Contract("largest feedback count must be >= 1".into()));
        }
        let mut base = self.base.clone();
        base.budget = max;
        base.validate()
    }
}

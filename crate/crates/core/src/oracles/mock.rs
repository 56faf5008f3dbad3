use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{LanguageOracle, PromptBundle};
use crate::domain::{DifficultyFeedback, NormConstraint, PreferenceWeights, Query};
use crate::error::{Error, Result};
use crate::inference::{random_point, Interval};
use crate::seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MockOracleConfig {
    /// `None` gives an uninformed oracle: uniform weight samples, full ranges.
    #[serde(default)]
    pub ground_truth: Option<PreferenceWeights>,
    #[serde(default)]
    pub weight_noise_std: f64,
    /// P(judge says no | unanswerable).
    #[serde(default = "one")]
    pub y0: f64,
    /// P(judge says yes | answerable).
    #[serde(default = "one")]
    pub y1: f64,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

impl MockOracleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.weight_noise_std.is_finite() && self.weight_noise_std >= 0.0) {
            return Err(Error::Domain(format!("weight_noise_std must be >= 0, got {}", self.weight_noise_std)));
        }
        for (name, p) in [("y0", self.y0), ("y1", self.y1)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Domain(format!("{name} = {p} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

pub type AnswerabilityFn = Arc<dyn Fn(&Query) -> bool + Send + Sync>;

/// Seeded stand-in for a language model.
#[derive(Clone)]
pub struct MockOracle {
    pub config: MockOracleConfig,
    answerable: Option<AnswerabilityFn>,
}

impl fmt::Debug for MockOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MockOracle")
            .field("config", &self.config)
            .field("answerable", &self.answerable.as_ref().map(|_| "<fn>"))
            .finish()
    }
}

impl MockOracle {
    pub fn new(config: MockOracleConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, answerable: None })
    }

    /// The predicate deciding which queries are truly answerable; without
    /// one every query counts as answerable.
    pub fn with_answerability(mut self, f: AnswerabilityFn) -> Self {
        self.answerable = Some(f);
        self
    }

    fn noisy(&self, g: &[f64], rng: &mut rand_chacha::ChaCha8Rng) -> Vec<f64> {
        let sd = self.config.weight_noise_std;
        g.iter().map(|x| x + sd * rng.sample::<f64, _>(StandardNormal)).collect()
    }
}

impl LanguageOracle for MockOracle {
    fn sample_weights(&self, bundle: &PromptBundle, m: usize, nonce: u64) -> Result<Vec<PreferenceWeights>> {
        if m == 0 {
            return Err(Error::Contract("m must be >= 1".into()));
        }
        let d = bundle.catalog.len();
        let constraint = NormConstraint::UnitL2Nonnegative;
        let mut rng = seed::stream(self.config.seed, "mock-weights", nonce);
        (0..m)
            .map(|_| {
                let Some(g) = &self.config.ground_truth else {
                    return PreferenceWeights::new(random_point(&mut rng, d, constraint), constraint);
                };
                if g.len() != d {
                    return Err(Error::DimensionMismatch { expected: d, got: g.len() });
                }
                if self.config.weight_noise_std == 0.0 {
                    return Ok(g.clone());
                }
                // redraw the rare sample whose projection vanishes
                for _ in 0..100 {
                    if let Some(p) = constraint.project(&self.noisy(g.as_slice(), &mut rng)) {
                        return PreferenceWeights::new(p, constraint);
                    }
                }
                PreferenceWeights::projected(g.as_slice(), constraint)
            })
            .collect()
    }

    fn sample_ranges(&self, bundle: &PromptBundle, _nonce: u64) -> Result<Vec<Interval>> {
        let d = bundle.catalog.len();
        let Some(g) = &self.config.ground_truth else {
            return Ok(vec![Interval { min: 0.0, max: 1.0 }; d]);
        };
        if g.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: g.len() });
        }
        let sd = self.config.weight_noise_std;
        g.as_slice()
            .iter()
            .map(|x| Interval::new((x - sd).clamp(0.0, 1.0), (x + sd).clamp(0.0, 1.0)))
            .collect()
    }

    fn judge_answerable(
        &self,
        _bundle: &PromptBundle,
        _fq: &[DifficultyFeedback],
        q: &Query,
        _rendered: (&str, &str),
        nonce: u64,
    ) -> Result<bool> {
        let truly = self.answerable.as_ref().is_none_or(|f| f(q));
        let u: f64 = seed::stream(self.config.seed, "mock-judge", nonce).random();
        Ok(if truly { u < self.config.y1 } else { u >= self.config.y0 })
    }
}

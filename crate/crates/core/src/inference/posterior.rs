use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::bt::{bt_log_likelihood, BTConfig, CompiledFeedback};
use super::prior::{language_log_prior, LanguagePrior, LOG_ZERO};
use crate::domain::{PairwiseFeedback, PreferenceWeights, TrajectoryPool};
use crate::error::{contract, Error, Result};

/// Unnormalized `ln P(F_h | ω) + ln P(ω | F_l)`.
pub fn log_posterior(
    w: &PreferenceWeights,
    fh: &[PairwiseFeedback],
    pool: &TrajectoryPool,
    prior: &LanguagePrior,
    bt: &BTConfig,
) -> Result<f64> {
    let lp = language_log_prior(w, prior)?;
    if lp == LOG_ZERO {
        return Ok(LOG_ZERO);
    }
    Ok(lp + bt_log_likelihood(w, fh, pool, bt)?)
}

/// Posterior density with feedback precompiled for repeated evaluation.
#[derive(Clone, Debug)]
pub struct PosteriorTarget {
    feedback: CompiledFeedback,
    prior: LanguagePrior,
    dimension: usize,
}

impl PosteriorTarget {
    pub fn new(fh: &[PairwiseFeedback], pool: &TrajectoryPool, prior: &LanguagePrior, bt: &BTConfig) -> Result<Self> {
        prior.validate()?;
        let dimension = pool.dimension();
        if let Some(d) = prior.dimension() {
            if d != dimension {
                return Err(Error::DimensionMismatch { expected: dimension, got: d });
            }
        }
        Ok(Self { feedback: CompiledFeedback::new(fh, pool, bt)?, prior: prior.clone(), dimension })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn prior(&self) -> &LanguagePrior {
        &self.prior
    }

    pub fn log_density(&self, w: &[f64]) -> f64 {
        let lp = self.prior.log_density_raw(w);
        if lp == LOG_ZERO {
            return LOG_ZERO;
        }
        lp + self.feedback.log_likelihood(w)
    }
}

/// Weight samples from one MCMC chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSamples {
    pub samples: Vec<PreferenceWeights>,
    #[serde(with = "log_density_serde")]
    pub log_densities: Vec<f64>,
    pub acceptance_rate: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub config: serde_json::Value,
}

impl PosteriorSamples {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.samples.first().map_or(0, PreferenceWeights::len)
    }

    /// Index of the highest log-density; the first one wins ties.
    pub fn map_index(&self) -> Result<usize> {
        if self.samples.is_empty() || self.samples.len() != self.log_densities.len() {
            return Err(contract("posterior has no samples or mismatched densities"));
        }
        let mut best = 0;
        for (i, &ld) in self.log_densities.iter().enumerate().skip(1) {
            if ld > self.log_densities[best] {
                best = i;
            }
        }
        Ok(best)
    }

    pub fn summary(&self) -> Result<PosteriorSummary> {
        let map = map_estimate(self)?.as_slice().to_vec();
        let n = self.samples.len() as f64;
        let d = self.dimension();
        let mut mean = vec![0.0; d];
        for s in &self.samples {
            mean.iter_mut().zip(s.as_slice()).for_each(|(m, x)| *m += x / n);
        }
        let mut sd = vec![0.0; d];
        for s in &self.samples {
            sd.iter_mut().zip(s.as_slice()).zip(&mean).for_each(|((v, x), m)| *v += (x - m) * (x - m) / n);
        }
        sd.iter_mut().for_each(|v| *v = v.sqrt());
        Ok(PosteriorSummary { map, mean, sd, acceptance_rate: self.acceptance_rate, n_samples: self.samples.len() })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub map: Vec<f64>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub acceptance_rate: f64,
    pub n_samples: usize,
}

/// The maximum a posteriori sample.
pub fn map_estimate(p: &PosteriorSamples) -> Result<&PreferenceWeights> {
    Ok(&p.samples[p.map_index()?])
}

/// Finite log-densities serialize as numbers, [`LOG_ZERO`] as `"log_zero"`.
pub mod log_density_serde {
    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Finite(f64),
        Sentinel(String),
    }

    pub const SENTINEL: &str = "log_zero";

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
        let reprs: Vec<Repr> = v
            .iter()
            .map(|&x| if x.is_finite() { Repr::Finite(x) } else { Repr::Sentinel(SENTINEL.into()) })
            .collect();
        reprs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
        let reprs = Vec::<Repr>::deserialize(d)?;
        reprs
            .into_iter()
            .map(|r| match r {
                Repr::Finite(x) => Ok(x),
                Repr::Sentinel(s) if s == SENTINEL => Ok(LOG_ZERO),
                Repr::Sentinel(s) => Err(serde::de::Error::custom(format!("unknown log-density `{s}`"))),
            })
            .collect()
    }
}

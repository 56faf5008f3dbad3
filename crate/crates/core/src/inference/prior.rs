//! Language-derived priors over preference weights.

use serde::{Deserialize, Serialize};

use crate::domain::{cosine_distance_raw, l2_norm, PreferenceWeights};
use crate::error::{contract, Error, Result};

/// Log of zero density. Kept as a float internally; serialized as a sentinel.
pub const LOG_ZERO: f64 = f64::NEG_INFINITY;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distance {
    #[default]
    Euclidean,
    Cosine,
}

impl Distance {
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Distance::Euclidean => {
                a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
            }
            // zero vectors have no direction; treat them as maximally distant
            Distance::Cosine => cosine_distance_raw(a, b).unwrap_or(2.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub min: f64,
    pub max: f64,
}

impl Interval {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || min > max {
            return Err(contract(format!("invalid interval [{min}, {max}]")));
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.min <= x && x <= self.max
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.min + self.max)
    }
}

/// `P(ω | F_l)` built from language-model output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum LanguagePrior {
    /// Uniform over the constraint set.
    Flat,
    /// `exp(−β_l · mean_i Distance(ω_i, ω))` over sampled weight vectors.
    SampleDistance {
        samples: Vec<PreferenceWeights>,
        beta_l: f64,
        #[serde(default)]
        distance: Distance,
    },
    /// Indicator of every component lying inside its interval.
    Range { ranges: Vec<Interval> },
}

impl LanguagePrior {
    pub fn sample_distance(samples: Vec<PreferenceWeights>, beta_l: f64, distance: Distance) -> Result<Self> {
        let prior = LanguagePrior::SampleDistance { samples, beta_l, distance };
        prior.validate()?;
        Ok(prior)
    }

    pub fn range(ranges: Vec<Interval>) -> Result<Self> {
        let prior = LanguagePrior::Range { ranges };
        prior.validate()?;
        Ok(prior)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LanguagePrior::Flat => Ok(()),
            LanguagePrior::SampleDistance { samples, beta_l, .. } => {
                if samples.is_empty() {
                    return Err(contract("sample-distance prior needs at least one sample"));
                }
                if !beta_l.is_finite() || *beta_l < 0.0 {
                    return Err(Error::Domain(format!("beta_l must be finite and >= 0, got {beta_l}")));
                }
                let d = samples[0].len();
                if let Some(s) = samples.iter().find(|s| s.len() != d) {
                    return Err(Error::DimensionMismatch { expected: d, got: s.len() });
                }
                Ok(())
            }
            LanguagePrior::Range { ranges } => {
                if ranges.is_empty() {
                    return Err(contract("range prior needs one interval per concept"));
                }
                for r in ranges {
                    Interval::new(r.min, r.max)?;
                }
                Ok(())
            }
        }
    }

    pub fn dimension(&self) -> Option<usize> {
        match self {
            LanguagePrior::Flat => None,
            LanguagePrior::SampleDistance { samples, .. } => samples.first().map(|s| s.len()),
            LanguagePrior::Range { ranges } => Some(ranges.len()),
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            LanguagePrior::Flat => "flat",
            LanguagePrior::SampleDistance { .. } => "sample_distance",
            LanguagePrior::Range { .. } => "range",
        }
    }

    /// Log-density on raw weights; dimension must already be checked.
    pub(crate) fn log_density_raw(&self, w: &[f64]) -> f64 {
        match self {
            LanguagePrior::Flat => 0.0,
            LanguagePrior::SampleDistance { samples, beta_l, distance } => {
                let mean = samples.iter().map(|s| distance.eval(s.as_slice(), w)).sum::<f64>()
                    / samples.len() as f64;
                -beta_l * mean
            }
            LanguagePrior::Range { ranges } => {
                if ranges.iter().zip(w).all(|(r, x)| r.contains(*x)) {
                    0.0
                } else {
                    LOG_ZERO
                }
            }
        }
    }

    /// Normalized mean of the samples, or the interval midpoints.
    pub fn center(&self) -> Option<Vec<f64>> {
        match self {
            LanguagePrior::Flat => None,
            LanguagePrior::SampleDistance { samples, .. } => {
                let d = samples[0].len();
                let mut mean = vec![0.0; d];
                for s in samples {
                    mean.iter_mut().zip(s.as_slice()).for_each(|(m, x)| *m += x);
                }
                let n = l2_norm(&mean);
                if n > 0.0 {
                    mean.iter_mut().for_each(|m| *m /= n);
                }
                Some(mean)
            }
            LanguagePrior::Range { ranges } => Some(ranges.iter().map(Interval::midpoint).collect()),
        }
    }
}

/// `ln P(ω | F_l)` up to a constant; [`LOG_ZERO`] outside a range prior's support.
pub fn language_log_prior(w: &PreferenceWeights, prior: &LanguagePrior) -> Result<f64> {
    prior.validate()?;
    if let Some(d) = prior.dimension() {
        if d != w.len() {
            return Err(Error::DimensionMismatch { expected: d, got: w.len() });
        }
    }
    Ok(prior.log_density_raw(w.as_slice()))
}

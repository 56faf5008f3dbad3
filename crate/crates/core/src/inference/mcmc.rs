//! Random-walk Metropolis over the weight constraint set.
//!
//! Proposals add isotropic Gaussian noise and project back onto the
//! constraint set; acceptance uses the plain density ratio.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::posterior::{PosteriorSamples, PosteriorTarget};
use super::prior::{LanguagePrior, LOG_ZERO};
use crate::domain::{NormConstraint, PreferenceWeights};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MCMCConfig {
    pub n_samples: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub proposal_std: f64,
    pub seed: u64,
    pub constraint: NormConstraint,
    /// Upper bound on `n_samples * thin + burn_in`.
    pub max_steps: usize,
    pub max_init_attempts: usize,
}

impl Default for MCMCConfig {
    fn default() -> Self {
        Self {
            n_samples: 500,
            burn_in: 1000,
            thin: 10,
            proposal_std: 0.05,
            seed: 0,
            constraint: NormConstraint::UnitL2Nonnegative,
            max_steps: 10_000_000,
            max_init_attempts: 1000,
        }
    }
}

impl MCMCConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 || self.thin == 0 {
            return Err(Error::Contract("n_samples and thin must be positive".into()));
        }
        if !(self.proposal_std.is_finite() && self.proposal_std > 0.0) {
            return Err(Error::Domain(format!("proposal_std must be > 0, got {}", self.proposal_std)));
        }
        let steps = self
            .n_samples
            .checked_mul(self.thin)
            .and_then(|s| s.checked_add(self.burn_in))
            .ok_or_else(|| Error::Contract("chain length overflows".into()))?;
        if steps > self.max_steps {
            return Err(Error::Contract(format!("chain length {steps} exceeds max_steps {}", self.max_steps)));
        }
        Ok(())
    }

    pub fn total_steps(&self) -> usize {
        self.burn_in + self.n_samples * self.thin
    }
}

fn gaussian_vec(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Uniform draw on the constraint set (standard normal for unconstrained).
pub fn random_point(rng: &mut ChaCha8Rng, d: usize, constraint: NormConstraint) -> Vec<f64> {
    loop {
        let mut v = gaussian_vec(rng, d, 1.0);
        if constraint == NormConstraint::UnitL2Nonnegative {
            v.iter_mut().for_each(|x| *x = x.abs());
        }
        if let Some(p) = constraint.project(&v) {
            return p;
        }
    }
}

fn restart_point(rng: &mut ChaCha8Rng, prior: &LanguagePrior, d: usize, constraint: NormConstraint) -> Vec<f64> {
    match prior {
        LanguagePrior::Range { ranges } => {
            let raw: Vec<f64> = ranges.iter().map(|r| rng.random_range(r.min..=r.max)).collect();
            constraint.project(&raw).unwrap_or_else(|| random_point(rng, d, constraint))
        }
        _ => random_point(rng, d, constraint),
    }
}

/// Samples the posterior with a single Metropolis chain.
pub fn mh_sample(
    target: &PosteriorTarget,
    cfg: &MCMCConfig,
    init: Option<&PreferenceWeights>,
) -> Result<PosteriorSamples> {
    cfg.validate()?;
    let d = target.dimension();
    let constraint = cfg.constraint;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let start = match init {
        Some(w) if w.len() != d => return Err(Error::DimensionMismatch { expected: d, got: w.len() }),
        Some(w) => constraint.project(w.as_slice()),
        None => target.prior().center().and_then(|c| constraint.project(&c)),
    };
    let mut current = start.unwrap_or_else(|| random_point(&mut rng, d, constraint));
    let mut current_lp = target.log_density(&current);
    let mut attempts = 0;
    while current_lp == LOG_ZERO {
        if attempts >= cfg.max_init_attempts {
            return Err(Error::Initialization(format!(
                "no admissible starting point after {attempts} attempts"
            )));
        }
        attempts += 1;
        current = restart_point(&mut rng, target.prior(), d, constraint);
        current_lp = target.log_density(&current);
    }

    let mut samples = Vec::with_capacity(cfg.n_samples);
    let mut log_densities = Vec::with_capacity(cfg.n_samples);
    let mut accepted = 0usize;
    let total = cfg.total_steps();
    for step in 0..total {
        let noise = gaussian_vec(&mut rng, d, cfg.proposal_std);
        let raw: Vec<f64> = current.iter().zip(&noise).map(|(x, e)| x + e).collect();
        // the uniform draw happens every step so the stream does not depend on rejections
        let u: f64 = rng.random();
        if let Some(proposal) = constraint.project(&raw) {
            let lp = target.log_density(&proposal);
            if lp != LOG_ZERO && u.ln() < lp - current_lp {
                current = proposal;
                current_lp = lp;
                accepted += 1;
            }
        }
        if step >= cfg.burn_in && (step - cfg.burn_in + 1) % cfg.thin == 0 {
            samples.push(PreferenceWeights::new(current.clone(), constraint)?);
            log_densities.push(current_lp);
        }
    }

    Ok(PosteriorSamples {
        samples,
        log_densities,
        acceptance_rate: accepted as f64 / total as f64,
        seed: cfg.seed,
        config: serde_json::to_value(cfg)?,
    })
}

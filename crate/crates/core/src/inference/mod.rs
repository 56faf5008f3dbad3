//! Posterior over preference weights: Bradley-Terry likelihood times a
//! language-derived prior, sampled with random-walk Metropolis.

mod bt;
mod mcmc;
mod posterior;
mod prior;

pub use bt::{bt_log_likelihood, bt_pair_prob, bt_prob_from_values, log_sigmoid, sigmoid, BTConfig, CompiledFeedback};
pub use mcmc::{mh_sample, random_point, MCMCConfig};
pub use posterior::{log_density_serde, log_posterior, map_estimate, PosteriorSamples, PosteriorSummary, PosteriorTarget};
pub use prior::{language_log_prior, Distance, Interval, LanguagePrior, LOG_ZERO};

use crate::domain::{PairwiseFeedback, PreferenceWeights, TrajectoryPool};
use crate::error::Result;

/// Builds the posterior target and runs one chain.
pub fn sample_posterior(
    fh: &[PairwiseFeedback],
    pool: &TrajectoryPool,
    prior: &LanguagePrior,
    bt: &BTConfig,
    mcmc: &MCMCConfig,
    init: Option<&PreferenceWeights>,
) -> Result<PosteriorSamples> {
    let target = PosteriorTarget::new(fh, pool, prior, bt)?;
    mh_sample(&target, mcmc, init)
}

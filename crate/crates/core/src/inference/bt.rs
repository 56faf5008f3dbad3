//! Bradley-Terry pairwise likelihood.
//!
//! The preference value of a trajectory is its negated concept score (scores
//! are costs), so `P(a ≻ b) = σ(β·(u_a − u_b))` with `u = −score`.

use serde::{Deserialize, Serialize};

use crate::domain::{dot, score_trajectory, PairwiseFeedback, PreferenceWeights, Trajectory, TrajectoryPool};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BTConfig {
    /// Inverse temperature.
    pub beta: f64,
}

impl Default for BTConfig {
    fn default() -> Self {
        Self { beta: 10.0 }
    }
}

impl BTConfig {
    pub fn new(beta: f64) -> Result<Self> {
        let cfg = Self { beta };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.beta.is_finite() || self.beta < 0.0 {
            return Err(Error::Domain(format!("beta must be finite and >= 0, got {}", self.beta)));
        }
        Ok(())
    }
}

/// Logistic function, evaluated on the branch that cannot overflow.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln σ(x)` without overflow for large |x|.
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// `e^{β u1} / (e^{β u1} + e^{β u2})` for two preference values.
pub fn bt_prob_from_values(u1: f64, u2: f64, beta: f64) -> f64 {
    if beta == 0.0 || u1 == u2 {
        return 0.5;
    }
    sigmoid(beta * (u1 - u2))
}

/// Probability that `t1` is preferred to `t2` under weights `w`.
pub fn bt_pair_prob(w: &PreferenceWeights, t1: &Trajectory, t2: &Trajectory, cfg: &BTConfig) -> Result<f64> {
    let s1 = score_trajectory(w, t1)?;
    let s2 = score_trajectory(w, t2)?;
    Ok(bt_prob_from_values(-s1, -s2, cfg.beta))
}

/// Sum of log-probabilities of each recorded choice.
pub fn bt_log_likelihood(
    w: &PreferenceWeights,
    fh: &[PairwiseFeedback],
    pool: &TrajectoryPool,
    cfg: &BTConfig,
) -> Result<f64> {
    let mut total = 0.0;
    for f in fh {
        let preferred = pool.get(f.preferred())?;
        let rejected = pool.get(f.rejected())?;
        let margin = score_trajectory(w, rejected)? - score_trajectory(w, preferred)?;
        total += log_sigmoid(cfg.beta * margin);
    }
    Ok(total)
}

/// Pairwise feedback resolved against a pool into feature differences
/// `f_rejected − f_preferred`, so each term is `ln σ(β·w·d)`.
#[derive(Clone, Debug, Default)]
pub struct CompiledFeedback {
    diffs: Vec<Vec<f64>>,
    beta: f64,
}

impl CompiledFeedback {
    pub fn new(fh: &[PairwiseFeedback], pool: &TrajectoryPool, cfg: &BTConfig) -> Result<Self> {
        cfg.validate()?;
        let diffs = fh
            .iter()
            .map(|f| {
                let p = pool.get(f.preferred())?;
                let r = pool.get(f.rejected())?;
                Ok(r.features.iter().zip(&p.features).map(|(a, b)| a - b).collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Ok(Self { diffs, beta: cfg.beta })
    }

    pub fn len(&self) -> usize {
        self.diffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diffs.is_empty()
    }

    pub fn log_likelihood(&self, w: &[f64]) -> f64 {
        self.diffs.iter().map(|d| log_sigmoid(self.beta * dot(w, d))).sum()
    }
}

//! Query scoring and selection strategies.
//!
//! Scores are computed from a table of per-sample trajectory scores, so
//! ranking thousands of candidate pairs costs one pass over the posterior.

use std::cmp::Ordering;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{dot, DifficultyFeedback, Query, TrajectoryPool};
use crate::error::{contract, Result};
use crate::inference::{sigmoid, BTConfig, PosteriorSamples};
use crate::seed;

/// Concept scores of every pool trajectory under every posterior sample.
pub struct ScoreTable<'a> {
    pool: &'a TrajectoryPool,
    /// `scores[k][i]`: sample `k`, trajectory `i`.
    scores: Vec<Vec<f64>>,
    beta: f64,
}

impl<'a> ScoreTable<'a> {
    pub fn new(omega: &PosteriorSamples, pool: &'a TrajectoryPool, bt: &BTConfig) -> Result<Self> {
        if omega.is_empty() {
            return Err(contract("posterior has no samples"));
        }
        if omega.dimension() != pool.dimension() {
            return Err(crate::Error::DimensionMismatch { expected: pool.dimension(), got: omega.dimension() });
        }
        let scores = omega
            .samples
            .iter()
            .map(|w| pool.trajectories().iter().map(|t| dot(w.as_slice(), &t.features)).collect())
            .collect();
        Ok(Self { pool, scores, beta: bt.beta })
    }

    pub fn n_samples(&self) -> usize {
        self.scores.len()
    }

    /// `P(τ_i ≻ τ_j | ω_k)`; lower cost is preferred.
    pub fn pair_prob(&self, k: usize, i: usize, j: usize) -> f64 {
        let gap = self.scores[k][j] - self.scores[k][i];
        if self.beta == 0.0 || gap == 0.0 {
            0.5
        } else {
            sigmoid(self.beta * gap)
        }
    }

    /// `min(P(τ_i ≻ τ_j), P(τ_j ≻ τ_i))`, identical for both orientations.
    pub fn minority_prob(&self, k: usize, i: usize, j: usize) -> f64 {
        let gap = (self.scores[k][j] - self.scores[k][i]).abs();
        if self.beta == 0.0 || gap == 0.0 {
            0.5
        } else {
            sigmoid(-self.beta * gap)
        }
    }

    fn indices(&self, q: &Query) -> Result<(usize, usize)> {
        Ok((self.pool.index_of(&q.first)?, self.pool.index_of(&q.second)?))
    }
}

/// A scoring rule over queries; higher means more worth asking.
pub trait Acquisition: Sync {
    fn score(&self, table: &ScoreTable<'_>, i: usize, j: usize) -> f64;
}

/// Posterior mean of `1 − max(P(τ_i ≻ τ_j), P(τ_j ≻ τ_i))`.
#[derive(Clone, Copy, Debug, Default)]
pub struct VarianceRatio;

impl Acquisition for VarianceRatio {
    fn score(&self, table: &ScoreTable<'_>, i: usize, j: usize) -> f64 {
        let n = table.n_samples();
        let total: f64 = (0..n).map(|k| table.minority_prob(k, i, j)).sum();
        total / n as f64
    }
}

pub fn variance_ratio(q: &Query, omega: &PosteriorSamples, pool: &TrajectoryPool, bt: &BTConfig) -> Result<f64> {
    let table = ScoreTable::new(omega, pool, bt)?;
    let (i, j) = table.indices(q)?;
    Ok(VarianceRatio.score(&table, i, j))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedQueries {
    entries: Vec<(Query, f64)>,
}

fn rank_order(a: &(Query, f64), b: &(Query, f64)) -> Ordering {
    b.1.partial_cmp(&a.1)
        .unwrap_or(Ordering::Equal)
        .then_with(|| (&a.0.first, &a.0.second).cmp(&(&b.0.first, &b.0.second)))
}

impl RankedQueries {
    /// Sorts descending by score; equal scores fall back to (first, second) id order.
    pub fn from_scored(mut entries: Vec<(Query, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(contract("no candidate queries"));
        }
        if let Some((q, s)) = entries.iter().find(|(_, s)| !s.is_finite()) {
            return Err(contract(format!("non-finite score {s} for ({}, {})", q.first, q.second)));
        }
        entries.sort_by(rank_order);
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(Query, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn top(&self) -> &Query {
        &self.entries[0].0
    }

    pub fn is_sorted(&self) -> bool {
        self.entries.windows(2).all(|w| rank_order(&w[0], &w[1]) != Ordering::Greater)
    }
}

pub fn rank_queries_with<A: Acquisition>(
    acquisition: &A,
    candidates: &[Query],
    omega: &PosteriorSamples,
    pool: &TrajectoryPool,
    bt: &BTConfig,
) -> Result<RankedQueries> {
    if candidates.is_empty() {
        return Err(contract("no candidate queries"));
    }
    let table = ScoreTable::new(omega, pool, bt)?;
    let scored = candidates
        .par_iter()
        .map(|q| {
            let (i, j) = table.indices(q)?;
            Ok((q.clone(), acquisition.score(&table, i, j)))
        })
        .collect::<Result<Vec<_>>>()?;
    RankedQueries::from_scored(scored)
}

/// Ranks candidates by variance ratio.
pub fn rank_queries(
    candidates: &[Query],
    omega: &PosteriorSamples,
    pool: &TrajectoryPool,
    bt: &BTConfig,
) -> Result<RankedQueries> {
    rank_queries_with(&VarianceRatio, candidates, omega, pool, bt)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OaqsSelection {
    pub query: Query,
    pub rank: usize,
    pub oracle_calls: usize,
    pub approved: bool,
}

/// Oracle-guided selection: returns the first of the top `k` queries the
/// judge deems answerable, else the top-ranked query unapproved.
///
/// Judge errors count as "not answerable".
pub fn oaqs_select<J>(ranked: &RankedQueries, fq: &[DifficultyFeedback], mut judge: J, k: usize) -> Result<OaqsSelection>
where
    J: FnMut(&[DifficultyFeedback], &Query) -> Result<bool>,
{
    if ranked.is_empty() || k == 0 {
        return Err(contract("oaqs needs a non-empty ranking and k >= 1"));
    }
    let mut calls = 0;
    for (rank, (q, _)) in ranked.entries().iter().take(k).enumerate() {
        calls += 1;
        match judge(fq, q) {
            Ok(true) => return Ok(OaqsSelection { query: q.clone(), rank, oracle_calls: calls, approved: true }),
            Ok(false) => {}
            Err(e) => log::warn!("answerability judgment for ({}, {}) failed: {e}", q.first, q.second),
        }
    }
    Ok(OaqsSelection { query: ranked.top().clone(), rank: 0, oracle_calls: calls, approved: false })
}

pub fn top_select(ranked: &RankedQueries) -> Result<Query> {
    if ranked.is_empty() {
        return Err(contract("empty ranking"));
    }
    Ok(ranked.top().clone())
}

pub fn random_select(candidates: &[Query], seed: u64) -> Result<Query> {
    if candidates.is_empty() {
        return Err(contract("no candidate queries"));
    }
    let mut rng = seed::stream(seed, "random-select", 0);
    Ok(candidates[rng.random_range(0..candidates.len())].clone())
}

//! A stepwise learning session: select a query, take feedback, update.
//!
//! The simulated-human runner and the HTTP service both drive this type, so
//! the two paths fold feedback identically.

use std::collections::HashSet;
use std::sync::Arc;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use super::config::{Method, PriorVariant, SessionConfig};
use super::test_accuracy;
use crate::acquisition::{oaqs_select, random_select, rank_queries};
use crate::domain::{cosine_distance, FeedbackState, PreferenceWeights, Query};
use crate::envs::Environment;
use crate::error::{contract, Error, Result};
use crate::humansim::HumanAnswer;
use crate::inference::{map_estimate, sample_posterior, LanguagePrior, PosteriorSamples, PosteriorSummary};
use crate::oracles::{AnswerabilityFn, LanguageOracle, PromptBundle};
use crate::seed::{self, derive_seed};
use crate::theory::EqsrRecord;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionPhase {
    Selecting,
    AwaitingFeedback,
    Stopped,
}

/// The outstanding query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PendingQuery {
    pub query: Query,
    /// Position in the acquisition ranking (`None` for random selection).
    pub rank: Option<usize>,
    pub oracle_calls: usize,
    /// Whether the answerability oracle approved it (OAQS only).
    pub approved: Option<bool>,
    /// Ground-truth answerability, when known.
    pub answerable: Option<bool>,
    /// Ground-truth answerability of the top-ranked candidate, when known.
    pub top_answerable: Option<bool>,
    pub first_render: String,
    pub second_render: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub cosine_distance: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub cost_delta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub query: Query,
    pub rank: Option<usize>,
    pub approved: Option<bool>,
    pub oracle_calls: usize,
    pub answer: HumanAnswer,
    pub answerable: Option<bool>,
    pub top_answerable: Option<bool>,
    pub map: Vec<f64>,
    pub acceptance_rate: f64,
    pub metrics: Metrics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionResult {
    pub config: SessionConfig,
    pub instruction: String,
    pub skip_threshold: Option<f64>,
    pub initial_metrics: Metrics,
    /// Per-iteration metrics carry only the cosine distance.
    pub records: Vec<IterationRecord>,
    pub final_map: Vec<f64>,
    pub final_metrics: Metrics,
    pub n_answered: usize,
    pub n_skipped: usize,
    pub oracle_calls: u64,
    /// Top-ranked answerability per iteration (ranked methods with known truth).
    pub eqsr_log: Vec<EqsrRecord>,
    /// Set when the session ended early on an error.
    pub aborted: Option<String>,
}

impl SessionResult {
    /// Fraction of asked queries that were answered.
    pub fn qsr(&self) -> Option<f64> {
        (!self.records.is_empty()).then(|| self.n_answered as f64 / self.records.len() as f64)
    }
}

/// Everything needed to resume a session, given its environment and oracle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub config: SessionConfig,
    pub instruction: String,
    pub ground_truth: Option<PreferenceWeights>,
    pub skip_threshold: Option<f64>,
    pub train: Vec<usize>,
    pub heldout: Vec<usize>,
    pub feedback: FeedbackState,
    pub prior: LanguagePrior,
    /// Size of F_l when the prior was last built.
    pub prior_language_len: usize,
    pub posterior: PosteriorSamples,
    pub phase: SessionPhase,
    pub pending: Option<PendingQuery>,
    pub oracle_nonce: u64,
    pub initial_metrics: Metrics,
    pub records: Vec<IterationRecord>,
    pub aborted: Option<String>,
}

pub struct Session {
    state: SessionState,
    env: Arc<Environment>,
    oracle: Arc<dyn LanguageOracle>,
    answerable: Option<AnswerabilityFn>,
}

/// Ground-truth metrics of `map` on the held-out trajectories. Metrics that
/// cannot be computed (e.g. no evaluable pair) are left empty.
pub fn evaluate(env: &Environment, truth: &PreferenceWeights, heldout: &[usize], map: &PreferenceWeights) -> Metrics {
    let test_accuracy = env
        .pool()
        .subset(heldout)
        .and_then(|h| test_accuracy(map, &h, truth))
        .map_err(|e| log::debug!("test accuracy unavailable: {e}"))
        .ok();
    let cost_delta = (!heldout.is_empty())
        .then(|| env.expected_cost_delta(map, truth, heldout))
        .and_then(|r| r.map_err(|e| log::debug!("cost delta unavailable: {e}")).ok());
    Metrics { cosine_distance: cosine_distance(map, truth).ok(), test_accuracy, cost_delta }
}

/// Seeded split of `0..n` into (train, held-out), both sorted.
pub fn split_pool(n: usize, heldout_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed::stream(seed, "heldout", 0));
    let k = ((n as f64) * heldout_fraction).round() as usize;
    let k = k.min(n.saturating_sub(2));
    let mut heldout = idx[..k].to_vec();
    let mut train = idx[k..].to_vec();
    heldout.sort_unstable();
    train.sort_unstable();
    (train, heldout)
}

impl Session {
    /// Builds the prior from the instruction and samples the initial posterior.
    pub fn start(
        config: SessionConfig,
        env: Arc<Environment>,
        oracle: Arc<dyn LanguageOracle>,
        instruction: String,
        ground_truth: Option<PreferenceWeights>,
        skip_threshold: Option<f64>,
        answerable: Option<AnswerabilityFn>,
    ) -> Result<Self> {
        config.validate()?;
        if env.kind() != config.env.kind {
            return Err(contract("environment does not match the configuration"));
        }
        if let Some(g) = &ground_truth {
            if g.len() != env.pool().dimension() {
                return Err(Error::DimensionMismatch { expected: env.pool().dimension(), got: g.len() });
            }
        }
        let (train, heldout) = split_pool(env.pool().len(), config.heldout_fraction, config.seed);
        let feedback = FeedbackState::new(instruction.clone())?;
        let placeholder = PosteriorSamples {
            samples: vec![],
            log_densities: vec![],
            acceptance_rate: 0.0,
            seed: 0,
            config: serde_json::Value::Null,
        };
        let mut session = Self {
            state: SessionState {
                config,
                instruction,
                ground_truth,
                skip_threshold,
                train,
                heldout,
                feedback,
                prior: LanguagePrior::Flat,
                prior_language_len: 0,
                posterior: placeholder,
                phase: SessionPhase::Selecting,
                pending: None,
                oracle_nonce: 0,
                initial_metrics: Metrics::default(),
                records: vec![],
                aborted: None,
            },
            env,
            oracle,
            answerable,
        };
        let fb = session.state.feedback.clone();
        session.state.prior = session.build_prior(&fb)?;
        session.state.prior_language_len = session.state.feedback.language().len();
        session.resample(None)?;
        session.state.initial_metrics = session.metrics(map_estimate(&session.state.posterior)?);
        Ok(session)
    }

    pub fn resume(state: SessionState, env: Arc<Environment>, oracle: Arc<dyn LanguageOracle>, answerable: Option<AnswerabilityFn>) -> Self {
        Self { state, env, oracle, answerable }
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn phase(&self) -> SessionPhase {
        self.state.phase
    }

    pub fn environment(&self) -> &Arc<Environment> {
        &self.env
    }

    pub fn iteration(&self) -> usize {
        self.state.records.len()
    }

    pub fn posterior(&self) -> &PosteriorSamples {
        &self.state.posterior
    }

    pub fn summary(&self) -> Result<PosteriorSummary> {
        self.state.posterior.summary()
    }

    fn bundle(&self, feedback: &FeedbackState) -> Result<PromptBundle> {
        let fl = feedback.language();
        PromptBundle::for_env(self.state.config.env.kind, &self.env.pool().catalog, &fl[0], &fl[1..])
    }

    fn next_nonce(&mut self) -> u64 {
        let n = self.state.oracle_nonce;
        self.state.oracle_nonce += 1;
        n
    }

    fn build_prior(&mut self, feedback: &FeedbackState) -> Result<LanguagePrior> {
        let cfg = &self.state.config;
        match cfg.effective_prior() {
            PriorVariant::Flat => Ok(LanguagePrior::Flat),
            PriorVariant::SampleDistance => {
                let (m, beta_l, distance) = (cfg.prior_samples, cfg.beta_l, cfg.prior_distance);
                let bundle = self.bundle(feedback)?;
                let nonce = self.next_nonce();
                let samples = self.oracle.sample_weights(&bundle, m, nonce)?;
                LanguagePrior::sample_distance(samples, beta_l, distance)
            }
            PriorVariant::Range => {
                let bundle = self.bundle(feedback)?;
                let nonce = self.next_nonce();
                LanguagePrior::range(self.oracle.sample_ranges(&bundle, nonce)?)
            }
        }
    }

    fn resample(&mut self, init: Option<PreferenceWeights>) -> Result<()> {
        let cfg = &self.state.config;
        let mut mcmc = cfg.mcmc.clone();
        mcmc.seed = derive_seed(cfg.seed, "mcmc", self.state.records.len() as u64);
        self.state.posterior = sample_posterior(
            self.state.feedback.pairwise(),
            self.env.pool(),
            &self.state.prior,
            &cfg.bt,
            &mcmc,
            init.as_ref(),
        )?;
        Ok(())
    }

    fn metrics(&self, map: &PreferenceWeights) -> Metrics {
        match &self.state.ground_truth {
            Some(truth) => evaluate(&self.env, truth, &self.state.heldout, map),
            None => Metrics::default(),
        }
    }

    /// Unasked, unskipped training pairs, subsampled to the cap.
    fn candidates(&self) -> Result<Vec<Query>> {
        let pool = self.env.pool();
        let ts = pool.trajectories();
        let asked = self
            .state
            .feedback
            .asked_keys()
            .into_iter()
            .map(|(a, b)| Ok((pool.index_of(&a)?, pool.index_of(&b)?)))
            .collect::<Result<HashSet<(usize, usize)>>>()?;
        let train = &self.state.train;
        let mut pairs = Vec::with_capacity(train.len() * train.len().saturating_sub(1) / 2);
        for (a, &i) in train.iter().enumerate() {
            for &j in &train[a + 1..] {
                if !asked.contains(&(i, j)) && !asked.contains(&(j, i)) {
                    pairs.push((i, j));
                }
            }
        }
        let cap = self.state.config.candidate_cap;
        if pairs.len() > cap {
            let mut rng = seed::stream(self.state.config.seed, "candidates", self.state.records.len() as u64);
            let mut keep = index::sample(&mut rng, pairs.len(), cap).into_vec();
            keep.sort_unstable();
            pairs = keep.into_iter().map(|k| pairs[k]).collect();
        }
        pairs.into_iter().map(|(i, j)| Query::new(ts[i].id.clone(), ts[j].id.clone())).collect()
    }

    fn renders(&self, q: &Query) -> Result<(String, String)> {
        let pool = self.env.pool();
        Ok((pool.get(&q.first)?.render.clone(), pool.get(&q.second)?.render.clone()))
    }

    /// The outstanding query, selecting one first if needed. Idempotent while
    /// awaiting feedback.
    pub fn next_query(&mut self) -> Result<PendingQuery> {
        match self.state.phase {
            SessionPhase::Stopped => return Err(Error::Contract("session stopped".into())),
            SessionPhase::AwaitingFeedback => {
                return self.state.pending.clone().ok_or_else(|| contract("awaiting feedback without a query"))
            }
            SessionPhase::Selecting => {}
        }
        let candidates = self.candidates()?;
        if candidates.is_empty() {
            self.state.phase = SessionPhase::Stopped;
            return Err(Error::Contract("no unasked queries remain; session stopped".into()));
        }
        let iteration = self.state.records.len() as u64;
        let cfg = self.state.config.clone();
        let pool = self.env.pool();
        let truth_of = |q: &Query| self.answerable.as_ref().map(|f| f(q));
        let (query, rank, calls, approved, top_answerable) = match cfg.method {
            Method::MapleRandom | Method::Brex => {
                let q = random_select(&candidates, derive_seed(cfg.seed, "select", iteration))?;
                (q, None, 0, None, None)
            }
            Method::MapleTop => {
                let ranked = rank_queries(&candidates, &self.state.posterior, pool, &cfg.bt)?;
                let top = ranked.top().clone();
                let ta = truth_of(&top);
                (top, Some(0), 0, None, ta)
            }
            Method::MapleOaqs => {
                let ranked = rank_queries(&candidates, &self.state.posterior, pool, &cfg.bt)?;
                let ta = truth_of(ranked.top());
                let bundle = self.bundle(&self.state.feedback)?;
                let mut nonce = self.state.oracle_nonce;
                let oracle = Arc::clone(&self.oracle);
                let sel = oaqs_select(
                    &ranked,
                    self.state.feedback.difficulty(),
                    |fq, q| {
                        let (a, b) = (pool.get(&q.first)?.render.as_str(), pool.get(&q.second)?.render.as_str());
                        let n = nonce;
                        nonce += 1;
                        oracle.judge_answerable(&bundle, fq, q, (a, b), n)
                    },
                    cfg.k,
                )?;
                self.state.oracle_nonce = nonce;
                (sel.query, Some(sel.rank), sel.oracle_calls, Some(sel.approved), ta)
            }
        };
        let (first_render, second_render) = self.renders(&query)?;
        let pending = PendingQuery {
            answerable: truth_of(&query),
            query,
            rank,
            oracle_calls: calls,
            approved,
            top_answerable,
            first_render,
            second_render,
        };
        self.state.pending = Some(pending.clone());
        self.state.phase = SessionPhase::AwaitingFeedback;
        Ok(pending)
    }

    /// Folds one answer into the feedback sets and updates the posterior.
    pub fn submit(&mut self, answer: HumanAnswer) -> Result<PosteriorSummary> {
        if self.state.phase != SessionPhase::AwaitingFeedback {
            return Err(Error::Contract(match self.state.phase {
                SessionPhase::Stopped => "session stopped".into(),
                _ => "no outstanding query".into(),
            }));
        }
        let pending = self.state.pending.clone().ok_or_else(|| contract("no outstanding query"))?;
        let q = pending.query.clone();
        // fold into a copy so a failed prior refresh leaves the session untouched
        let mut feedback = self.state.feedback.clone();
        match answer.choice {
            Some(c) => feedback.add_pairwise(q.clone(), c)?,
            None => feedback.mark_skipped(&q),
        }
        let uses_language = self.state.config.method.uses_language();
        if uses_language {
            if let Some(d) = answer.difficulty.as_deref().filter(|d| !d.trim().is_empty()) {
                feedback.add_difficulty(q.clone(), d);
            }
            if let Some(e) = &answer.explanation {
                feedback.add_language(e.clone());
            }
        }
        let prev_map = map_estimate(&self.state.posterior)?.clone();
        if uses_language && feedback.language().len() > self.state.prior_language_len {
            let nonce = self.state.oracle_nonce;
            match self.build_prior(&feedback) {
                Ok(p) => self.state.prior = p,
                Err(e) => {
                    self.state.oracle_nonce = nonce;
                    return Err(e);
                }
            }
            self.state.prior_language_len = feedback.language().len();
        }
        self.state.feedback = feedback;
        self.state.pending = None;

        // the record count doubles as the iteration index for seeding
        self.state.records.push(IterationRecord {
            iteration: self.state.records.len() + 1,
            query: q,
            rank: pending.rank,
            approved: pending.approved,
            oracle_calls: pending.oracle_calls,
            answer,
            answerable: pending.answerable,
            top_answerable: pending.top_answerable,
            map: vec![],
            acceptance_rate: 0.0,
            metrics: Metrics::default(),
        });
        self.resample(Some(prev_map))?;
        let map = map_estimate(&self.state.posterior)?.clone();
        // the costlier held-out metrics are computed on demand
        let metrics = Metrics {
            cosine_distance: self.state.ground_truth.as_ref().and_then(|t| cosine_distance(&map, t).ok()),
            ..Metrics::default()
        };
        let rec = self.state.records.last_mut().expect("just pushed");
        rec.map = map.into_vec();
        rec.acceptance_rate = self.state.posterior.acceptance_rate;
        rec.metrics = metrics;

        self.state.phase = if self.state.records.len() >= self.state.config.budget {
            SessionPhase::Stopped
        } else {
            SessionPhase::Selecting
        };
        self.summary()
    }

    /// Ends the session (idempotent) and returns its result.
    pub fn stop(&mut self) -> Result<SessionResult> {
        self.state.phase = SessionPhase::Stopped;
        self.state.pending = None;
        self.result()
    }

    pub fn abort(&mut self, reason: String) {
        self.state.aborted = Some(reason);
        self.state.phase = SessionPhase::Stopped;
        self.state.pending = None;
    }

    pub fn result(&self) -> Result<SessionResult> {
        let s = &self.state;
        let final_map = map_estimate(&s.posterior)?.as_slice().to_vec();
        let final_metrics = match s.records.last() {
            Some(_) => self.metrics(map_estimate(&s.posterior)?),
            None => s.initial_metrics.clone(),
        };
        let n_answered = s.records.iter().filter(|r| r.answer.choice.is_some()).count();
        let eqsr_log = s
            .records
            .iter()
            .filter_map(|r| r.top_answerable.map(|answerable| EqsrRecord { iteration: r.iteration, answerable }))
            .collect();
        Ok(SessionResult {
            config: s.config.clone(),
            instruction: s.instruction.clone(),
            skip_threshold: s.skip_threshold,
            initial_metrics: s.initial_metrics.clone(),
            records: s.records.clone(),
            final_map,
            final_metrics,
            n_answered,
            n_skipped: s.records.len() - n_answered,
            oracle_calls: s.oracle_nonce,
            eqsr_log,
            aborted: s.aborted.clone(),
        })
    }
}

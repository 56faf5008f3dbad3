//! Session configuration, the stepwise session, and batch experiments.

mod config;
mod experiment;
mod session;

pub use config::{BatchConfig, HumanSpec, Method, MockParams, OracleSpec, PriorVariant, SessionConfig, SkipRule};
pub use experiment::{run_experiment, ExperimentOutput, MethodSummary, MetricRow, SessionFailure, SummaryStat};
pub use session::{
    evaluate, split_pool, IterationRecord, Metrics, PendingQuery, Session, SessionPhase, SessionResult, SessionState,
};

use std::sync::Arc;

use crate::domain::{score_trajectory, PreferenceWeights, TrajectoryPool};
use crate::envs::Environment;
use crate::error::{contract, Error, Result};
use crate::humansim::{calibrate_skip_threshold, find_template, unanswerable, HumanConfig, InstructionTemplate, SimulatedHuman};
use crate::oracles::{AnswerabilityFn, LanguageOracle, LiveOracle, MockOracle, MockOracleConfig};
use crate::seed::derive_seed;

/// Fraction of pairs in `pool` ordered the same way by `w` and `truth`.
///
/// Pairs the ground truth scores equally are left out.
pub fn test_accuracy(w: &PreferenceWeights, pool: &TrajectoryPool, truth: &PreferenceWeights) -> Result<f64> {
    let ts = pool.trajectories();
    let learned = ts.iter().map(|t| score_trajectory(w, t)).collect::<Result<Vec<_>>>()?;
    let true_scores = ts.iter().map(|t| score_trajectory(truth, t)).collect::<Result<Vec<_>>>()?;
    let (mut agree, mut total) = (0usize, 0usize);
    for i in 0..ts.len() {
        for j in i + 1..ts.len() {
            let dt = true_scores[i] - true_scores[j];
            if dt == 0.0 {
                continue;
            }
            total += 1;
            if (learned[i] - learned[j]) * dt > 0.0 {
                agree += 1;
            }
        }
    }
    if total == 0 {
        return Err(contract("no pair with distinct ground-truth scores"));
    }
    Ok(agree as f64 / total as f64)
}

/// Builds the configured oracle. The mock is informed by `truth` and judges
/// with `answerable`.
pub fn build_oracle(
    spec: &OracleSpec,
    truth: Option<PreferenceWeights>,
    answerable: Option<AnswerabilityFn>,
    session_seed: u64,
) -> Result<Arc<dyn LanguageOracle>> {
    match spec {
        OracleSpec::Mock(p) => {
            let cfg = MockOracleConfig {
                ground_truth: truth,
                weight_noise_std: p.weight_noise_std,
                y0: p.y0,
                y1: p.y1,
                seed: p.seed.unwrap_or_else(|| derive_seed(session_seed, "mock-oracle", 0)),
            };
            let mut m = MockOracle::new(cfg)?;
            if let Some(f) = answerable {
                m = m.with_answerability(f);
            }
            Ok(Arc::new(m))
        }
        OracleSpec::Live(c) => Ok(Arc::new(LiveOracle::new(c.clone())?)),
    }
}

/// Skip threshold for a template on the session's training pool.
pub fn skip_threshold_for(cfg: &SessionConfig, env: &Environment, truth: &PreferenceWeights) -> Result<f64> {
    match cfg.human.skip {
        SkipRule::Threshold(t) => Ok(t),
        SkipRule::TargetAqsr(a) => {
            let (train, _) = split_pool(env.pool().len(), cfg.heldout_fraction, cfg.seed);
            calibrate_skip_threshold(&env.pool().subset(&train)?, truth, a)
        }
    }
}

/// Ground-truth answerability of queries for a template at a threshold.
pub fn answerability_fn(env: Arc<Environment>, truth: PreferenceWeights, threshold: f64) -> AnswerabilityFn {
    Arc::new(move |q| unanswerable(env.pool(), q, &truth, threshold).map(|u| !u).unwrap_or(false))
}

/// Starts an interactive session. An `instruction_id` in `cfg` makes it
/// template-backed, wired like a simulated run (ground truth, calibrated
/// skip threshold, answerability for the mock judge); otherwise
/// `instruction` is required and nothing is known about the truth.
pub fn start_session(cfg: SessionConfig, env: Arc<Environment>, instruction: Option<String>) -> Result<Session> {
    cfg.validate()?;
    match &cfg.instruction_id {
        Some(id) => {
            let t = find_template(cfg.env.kind, id)?;
            let threshold = skip_threshold_for(&cfg, &env, &t.ground_truth)?;
            let answerable = answerability_fn(Arc::clone(&env), t.ground_truth.clone(), threshold);
            let oracle = build_oracle(&cfg.oracle, Some(t.ground_truth.clone()), Some(Arc::clone(&answerable)), cfg.seed)?;
            Session::start(cfg, env, oracle, t.text, Some(t.ground_truth), Some(threshold), Some(answerable))
        }
        None => {
            let text = instruction.ok_or_else(|| contract("an instruction is required"))?;
            let oracle = build_oracle(&cfg.oracle, None, None, cfg.seed)?;
            Session::start(cfg, env, oracle, text, None, None, None)
        }
    }
}

/// Rebuilds a saved session with the wiring [`start_session`] gave it.
pub fn resume_session(state: SessionState, env: Arc<Environment>) -> Result<Session> {
    let answerable = match (&state.ground_truth, state.skip_threshold) {
        (Some(t), Some(th)) => Some(answerability_fn(Arc::clone(&env), t.clone(), th)),
        _ => None,
    };
    let oracle = build_oracle(&state.config.oracle, state.ground_truth.clone(), answerable.clone(), state.config.seed)?;
    Ok(Session::resume(state, env, oracle, answerable))
}

/// Generates the environment and looks up the template, then runs.
pub fn run_session(cfg: &SessionConfig) -> Result<SessionResult> {
    let env = Arc::new(Environment::generate(&cfg.env)?);
    let id = cfg.instruction_id.as_deref().ok_or_else(|| contract("simulated sessions need an instruction_id"))?;
    let template = find_template(cfg.env.kind, id)?;
    run_session_with(cfg, env, template)
}

/// Runs a full session against a simulated human, with the configured oracle.
pub fn run_session_with(cfg: &SessionConfig, env: Arc<Environment>, template: InstructionTemplate) -> Result<SessionResult> {
    cfg.validate()?;
    let truth = template.ground_truth.clone();
    let threshold = skip_threshold_for(cfg, &env, &truth)?;
    let answerable = answerability_fn(Arc::clone(&env), truth.clone(), threshold);
    let oracle = build_oracle(&cfg.oracle, Some(truth), Some(Arc::clone(&answerable)), cfg.seed)?;
    simulate(cfg, env, template, oracle, threshold, answerable)
}

/// As [`run_session_with`], with a caller-supplied oracle.
pub fn run_session_with_oracle(
    cfg: &SessionConfig,
    env: Arc<Environment>,
    template: InstructionTemplate,
    oracle: Arc<dyn LanguageOracle>,
) -> Result<SessionResult> {
    cfg.validate()?;
    let threshold = skip_threshold_for(cfg, &env, &template.ground_truth)?;
    let answerable = answerability_fn(Arc::clone(&env), template.ground_truth.clone(), threshold);
    simulate(cfg, env, template, oracle, threshold, answerable)
}

/// An oracle failure mid-session ends it early; the partial result carries
/// the reason in `aborted`.
fn simulate(
    cfg: &SessionConfig,
    env: Arc<Environment>,
    template: InstructionTemplate,
    oracle: Arc<dyn LanguageOracle>,
    threshold: f64,
    answerable: AnswerabilityFn,
) -> Result<SessionResult> {
    let truth = template.ground_truth.clone();
    let human_cfg = HumanConfig {
        rationality: cfg.human.rationality,
        clarification_prob: cfg.human.clarification_prob,
        skip_threshold: threshold,
        seed: derive_seed(cfg.seed, "human-sim", 0),
    };
    let instruction = template.text.clone();
    let mut human = SimulatedHuman::new(template, human_cfg)?;
    let mut session =
        Session::start(cfg.clone(), Arc::clone(&env), oracle, instruction, Some(truth), Some(threshold), Some(answerable))?;
    while session.phase() != SessionPhase::Stopped {
        let step = session.next_query().and_then(|p| {
            let a = human.answer(env.pool(), &p.query)?;
            session.submit(a)
        });
        match step {
            Ok(_) => {}
            Err(Error::Oracle(msg)) => {
                log::warn!("session aborted after {} iterations: {msg}", session.iteration());
                session.abort(msg);
            }
            // candidates ran out: a normal early stop
            Err(e) if session.phase() == SessionPhase::Stopped => log::info!("{e}"),
            Err(e) => return Err(e),
        }
    }
    session.result()
}

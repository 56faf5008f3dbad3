use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{BatchConfig, Method};
use super::session::{evaluate, split_pool, Metrics, SessionResult};
use super::run_session_with;
use crate::domain::PreferenceWeights;
use crate::envs::Environment;
use crate::error::Result;
use crate::humansim::find_template;
use crate::theory::{empirical_eqsr, EqsrRecord};

/// One long-format CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub method: String,
    pub instruction: String,
    pub seed: u64,
    pub n_feedback: usize,
    pub metric: String,
    pub value: f64,
}

/// Mean ± standard error of one metric for one method at one feedback count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryStat {
    pub method: String,
    pub n_feedback: usize,
    pub metric: String,
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub sessions: usize,
    pub aborted: usize,
    /// Answerable fraction of top-ranked queries, when logged.
    pub eqsr: Option<f64>,
    /// Answered fraction of asked queries.
    pub qsr: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionFailure {
    pub method: String,
    pub instruction: String,
    pub seed: u64,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub config: BatchConfig,
    pub rows: Vec<MetricRow>,
    pub summary: Vec<SummaryStat>,
    pub methods: Vec<MethodSummary>,
    pub failures: Vec<SessionFailure>,
}

impl ExperimentOutput {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.rows {
            out.serialize(r).map_err(|e| crate::Error::Io(e.into()))?;
        }
        out.flush()?;
        Ok(())
    }
}

fn metric_values(m: &Metrics) -> [(&'static str, Option<f64>); 3] {
    [("cosine_distance", m.cosine_distance), ("test_accuracy", m.test_accuracy), ("cost_delta", m.cost_delta)]
}

/// Reads a session's metrics at each requested feedback count.
fn rows_for(res: &SessionResult, env: &Environment, truth: &PreferenceWeights, instruction: &str, counts: &[usize]) -> Result<Vec<MetricRow>> {
    let (_, heldout) = split_pool(env.pool().len(), res.config.heldout_fraction, res.config.seed);
    let constraint = res.config.mcmc.constraint;
    let mut rows = Vec::new();
    for &n in counts {
        let metrics = match n {
            0 => res.initial_metrics.clone(),
            _ => match res.records.get(n - 1) {
                Some(r) => evaluate(env, truth, &heldout, &PreferenceWeights::new(r.map.clone(), constraint)?),
                None => continue,
            },
        };
        let mut push = |metric: &str, value: f64| {
            rows.push(MetricRow {
                method: res.config.method.name().into(),
                instruction: instruction.into(),
                seed: res.config.seed,
                n_feedback: n,
                metric: metric.into(),
                value,
            })
        };
        for (name, v) in metric_values(&metrics) {
            if let Some(v) = v {
                push(name, v);
            }
        }
        let answered = res.records[..n].iter().filter(|r| r.answer.choice.is_some()).count();
        push("answered", answered as f64);
    }
    Ok(rows)
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs every method × instruction × seed cell in parallel. Failed sessions
/// are recorded and the batch continues; output order does not depend on
/// scheduling.
pub fn run_experiment(batch: &BatchConfig) -> Result<ExperimentOutput> {
    batch.validate()?;
    let budget = batch.feedback_counts.iter().copied().max().unwrap_or(1);
    let env = Arc::new(Environment::generate(&batch.base.env)?);
    let cells: Vec<(Method, String, u64)> = batch
        .methods
        .iter()
        .flat_map(|&m| batch.instructions.iter().flat_map(move |i| batch.seeds.iter().map(move |&s| (m, i.clone(), s))))
        .collect();
    let outcomes: Vec<_> = cells
        .par_iter()
        .map(|(method, instruction, seed)| {
            let mut cfg = batch.base.clone();
            cfg.method = *method;
            cfg.instruction_id = Some(instruction.clone());
            cfg.seed = *seed;
            cfg.budget = budget;
            let res = find_template(cfg.env.kind, instruction).and_then(|t| {
                let truth = t.ground_truth.clone();
                let r = run_session_with(&cfg, Arc::clone(&env), t)?;
                let rows = rows_for(&r, &env, &truth, instruction, &batch.feedback_counts)?;
                Ok((r, rows))
            });
            (*method, instruction.clone(), *seed, res)
        })
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut per_method: BTreeMap<Method, (usize, usize, Vec<EqsrRecord>, usize, usize)> = BTreeMap::new();
    for (method, instruction, seed, res) in outcomes {
        match res {
            Ok((r, cell_rows)) => {
                rows.extend(cell_rows);
                let e = per_method.entry(method).or_default();
                e.0 += 1;
                e.1 += usize::from(r.aborted.is_some());
                e.2.extend(r.eqsr_log.iter().cloned());
                e.3 += r.n_answered;
                e.4 += r.records.len();
            }
            Err(err) => {
                log::warn!("{} / {instruction} / seed {seed} failed: {err}", method.name());
                failures.push(SessionFailure { method: method.name().into(), instruction, seed, error: err.to_string() });
            }
        }
    }

    let mut groups: BTreeMap<(String, usize, String), Vec<f64>> = BTreeMap::new();
    for r in &rows {
        groups.entry((r.method.clone(), r.n_feedback, r.metric.clone())).or_default().push(r.value);
    }
    let summary = groups
        .into_iter()
        .map(|((method, n_feedback, metric), xs)| {
            let (mean, se) = mean_se(&xs);
            SummaryStat { method, n_feedback, metric, mean, se, n: xs.len() }
        })
        .collect();
    let methods = per_method
        .into_iter()
        .map(|(m, (sessions, aborted, log, answered, asked))| MethodSummary {
            method: m.name().into(),
            sessions,
            aborted,
            eqsr: empirical_eqsr(&log).ok(),
            qsr: (asked > 0).then(|| answered as f64 / asked as f64),
        })
        .collect();
    Ok(ExperimentOutput { config: batch.clone(), rows, summary, methods, failures })
}

//! Simulated human: answers queries from hidden ground-truth weights.
//!
//! A query is unanswerable when the trajectories are within `skip_threshold`
//! on both of the two most heavily weighted concepts. Answered queries pick
//! the lower-cost trajectory (or a Bradley-Terry draw), and each answer may
//! carry a clarification.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{dot, Choice, ConceptCatalog, NormConstraint, PreferenceWeights, Query, TrajectoryPool};
use crate::envs::EnvKind;
use crate::error::{contract, Error, Result};
use crate::inference::bt_prob_from_values;
use crate::seed;

const ROUTING_TEMPLATES: &str = include_str!("../assets/instructions/routing.json");
const HOMEGRID_TEMPLATES: &str = include_str!("../assets/instructions/homegrid.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Style {
    Clear,
    Natural,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstructionTemplate {
    pub id: String,
    pub style: Style,
    pub text: String,
    pub ground_truth: PreferenceWeights,
    #[serde(default)]
    pub clarifications: Vec<String>,
}

#[derive(Deserialize)]
struct TemplateRepr {
    id: String,
    style: Style,
    text: String,
    /// Concept name → weight; omitted concepts weigh zero.
    ground_truth: BTreeMap<String, f64>,
    #[serde(default)]
    clarifications: Vec<String>,
}

#[derive(Deserialize)]
struct DatasetRepr {
    templates: Vec<TemplateRepr>,
}

impl InstructionTemplate {
    pub fn new(
        id: impl Into<String>,
        style: Style,
        text: impl Into<String>,
        ground_truth: PreferenceWeights,
        clarifications: Vec<String>,
    ) -> Result<Self> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(contract("instruction text is empty"));
        }
        Ok(Self { id: id.into(), style, text, ground_truth, clarifications })
    }
}

/// Parses an instruction dataset against a catalog. Ground truths are
/// normalized onto the nonnegative unit sphere.
pub fn parse_templates(json: &str, catalog: &ConceptCatalog) -> Result<Vec<InstructionTemplate>> {
    let data: DatasetRepr = serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
    data.templates
        .into_iter()
        .map(|t| {
            let mut w = vec![0.0; catalog.len()];
            for (name, v) in &t.ground_truth {
                let i = catalog
                    .index_of(name)
                    .ok_or_else(|| Error::Parse(format!("template {}: unknown concept '{name}'", t.id)))?;
                w[i] = *v;
            }
            let gt = PreferenceWeights::projected(&w, NormConstraint::UnitL2Nonnegative)
                .map_err(|e| Error::Parse(format!("template {}: {e}", t.id)))?;
            InstructionTemplate::new(t.id, t.style, t.text, gt, t.clarifications)
        })
        .collect()
}

/// The instruction templates shipped for an environment.
pub fn builtin_templates(env: EnvKind) -> Vec<InstructionTemplate> {
    let (json, catalog) = match env {
        EnvKind::Routing => (ROUTING_TEMPLATES, crate::envs::routing::routing_catalog()),
        EnvKind::HomeGrid => (HOMEGRID_TEMPLATES, crate::envs::homegrid::homegrid_catalog()),
    };
    parse_templates(json, &catalog).expect("shipped templates are valid")
}

pub fn find_template(env: EnvKind, id: &str) -> Result<InstructionTemplate> {
    builtin_templates(env)
        .into_iter()
        .find(|t| t.id == id)
        .ok_or_else(|| contract(format!("unknown instruction '{id}'")))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Rationality {
    Deterministic,
    Boltzmann { beta_h: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HumanConfig {
    pub rationality: Rationality,
    pub clarification_prob: f64,
    pub skip_threshold: f64,
    pub seed: u64,
}

impl Default for HumanConfig {
    fn default() -> Self {
        Self { rationality: Rationality::Deterministic, clarification_prob: 0.2, skip_threshold: 0.05, seed: 0 }
    }
}

impl HumanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.clarification_prob) {
            return Err(Error::Domain(format!("clarification_prob {} outside [0, 1]", self.clarification_prob)));
        }
        if !(self.skip_threshold.is_finite() && self.skip_threshold > 0.0) {
            return Err(Error::Domain(format!("skip_threshold must be > 0, got {}", self.skip_threshold)));
        }
        if let Rationality::Boltzmann { beta_h } = self.rationality {
            if !(beta_h.is_finite() && beta_h >= 0.0) {
                return Err(Error::Domain(format!("beta_h must be >= 0, got {beta_h}")));
            }
        }
        Ok(())
    }
}

/// One answer `(f_h, f_l, f_q)`; `choice == None` means skipped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HumanAnswer {
    pub choice: Option<Choice>,
    pub explanation: Option<String>,
    pub difficulty: Option<String>,
}

/// Indices of the two concepts with largest |weight| (ties to the lower index).
fn top_two(w: &[f64]) -> (usize, Option<usize>) {
    let mut idx: Vec<usize> = (0..w.len()).collect();
    idx.sort_by(|&a, &b| w[b].abs().total_cmp(&w[a].abs()).then(a.cmp(&b)));
    (idx[0], idx.get(1).copied())
}

fn top_gaps(pool: &TrajectoryPool, q: &Query, w: &[f64]) -> Result<(usize, Option<usize>, f64, f64)> {
    let a = &pool.get(&q.first)?.features;
    let b = &pool.get(&q.second)?.features;
    let (c1, c2) = top_two(w);
    let g1 = (a[c1] - b[c1]).abs();
    let g2 = c2.map_or(0.0, |c| (a[c] - b[c]).abs());
    Ok((c1, c2, g1, g2))
}

/// True when the pair is within `threshold` on both top-weighted concepts.
pub fn unanswerable(pool: &TrajectoryPool, q: &Query, truth: &PreferenceWeights, threshold: f64) -> Result<bool> {
    let (_, _, g1, g2) = top_gaps(pool, q, truth.as_slice())?;
    Ok(g1 < threshold && g2 < threshold)
}

/// Fraction of unordered pool pairs that are answerable.
pub fn empirical_aqsr(pool: &TrajectoryPool, truth: &PreferenceWeights, threshold: f64) -> Result<f64> {
    let gaps = pair_max_gaps(pool, truth)?;
    if gaps.is_empty() {
        return Err(contract("pool has fewer than two trajectories"));
    }
    Ok(gaps.iter().filter(|&&g| g >= threshold).count() as f64 / gaps.len() as f64)
}

fn pair_max_gaps(pool: &TrajectoryPool, truth: &PreferenceWeights) -> Result<Vec<f64>> {
    if truth.len() != pool.dimension() {
        return Err(Error::DimensionMismatch { expected: pool.dimension(), got: truth.len() });
    }
    let (c1, c2) = top_two(truth.as_slice());
    let ts = pool.trajectories();
    let mut out = Vec::with_capacity(ts.len() * ts.len().saturating_sub(1) / 2);
    for i in 0..ts.len() {
        for j in i + 1..ts.len() {
            let g1 = (ts[i].features[c1] - ts[j].features[c1]).abs();
            let g2 = c2.map_or(0.0, |c| (ts[i].features[c] - ts[j].features[c]).abs());
            out.push(g1.max(g2));
        }
    }
    Ok(out)
}

/// Smallest threshold giving at most the target answerable fraction, so the
/// pool-level AQSR lands as close to `target_aqsr` as the pair gaps allow.
pub fn calibrate_skip_threshold(pool: &TrajectoryPool, truth: &PreferenceWeights, target_aqsr: f64) -> Result<f64> {
    if !(0.0 < target_aqsr && target_aqsr < 1.0) {
        return Err(Error::Domain(format!("target AQSR must be in (0, 1), got {target_aqsr}")));
    }
    let mut gaps = pair_max_gaps(pool, truth)?;
    if gaps.is_empty() {
        return Err(contract("pool has fewer than two trajectories"));
    }
    gaps.sort_by(f64::total_cmp);
    let k = (((1.0 - target_aqsr) * gaps.len() as f64).round() as usize).min(gaps.len() - 1);
    // pairs strictly below gaps[k] are unanswerable; keep the threshold positive
    Ok(gaps[k].max(1e-9))
}

/// Sequential, seeded simulated human for one session.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulatedHuman {
    pub template: InstructionTemplate,
    pub config: HumanConfig,
    answers_given: u64,
    used_clarifications: Vec<bool>,
}

impl SimulatedHuman {
    pub fn new(template: InstructionTemplate, config: HumanConfig) -> Result<Self> {
        config.validate()?;
        let used_clarifications = vec![false; template.clarifications.len()];
        Ok(Self { template, config, answers_given: 0, used_clarifications })
    }

    pub fn answers_given(&self) -> u64 {
        self.answers_given
    }

    pub fn instruction(&self) -> &str {
        &self.template.text
    }

    pub fn ground_truth(&self) -> &PreferenceWeights {
        &self.template.ground_truth
    }

    pub fn unanswerable(&self, pool: &TrajectoryPool, q: &Query) -> Result<bool> {
        unanswerable(pool, q, &self.template.ground_truth, self.config.skip_threshold)
    }

    pub fn answer(&mut self, pool: &TrajectoryPool, q: &Query) -> Result<HumanAnswer> {
        let w = self.template.ground_truth.as_slice();
        let (c1, c2, g1, g2) = top_gaps(pool, q, w)?;
        let mut rng = seed::stream(self.config.seed, "human", self.answers_given);
        self.answers_given += 1;
        let names: Vec<&str> = pool.catalog.names().collect();

        let skip = g1 < self.config.skip_threshold && g2 < self.config.skip_threshold;
        let choice_draw: f64 = rng.random();
        let clarify_draw: f64 = rng.random();
        let pick_draw: f64 = rng.random();

        let (choice, difficulty) = if skip {
            let which = match c2 {
                Some(c2) => format!("{} and {}", names[c1], names[c2]),
                None => names[c1].to_string(),
            };
            (None, Some(format!("I can't tell these apart: they look about the same on {which}.")))
        } else {
            let a = pool.get(&q.first)?;
            let b = pool.get(&q.second)?;
            let (sa, sb) = (dot(w, &a.features), dot(w, &b.features));
            let choice = match self.config.rationality {
                // lower cost wins; exact ties go to the first
                Rationality::Deterministic => {
                    if sb < sa { Choice::Second } else { Choice::First }
                }
                Rationality::Boltzmann { beta_h } => {
                    if choice_draw < bt_prob_from_values(-sa, -sb, beta_h) { Choice::First } else { Choice::Second }
                }
            };
            (Some(choice), None)
        };

        let explanation = if clarify_draw < self.config.clarification_prob {
            self.explain(pool, q, choice, pick_draw, &names)?
        } else {
            None
        };
        Ok(HumanAnswer { choice, explanation, difficulty })
    }

    /// A fresh clarification if the template has any left; otherwise (templates
    /// without clarifications) the concept that drove the choice.
    fn explain(&mut self, pool: &TrajectoryPool, q: &Query, choice: Option<Choice>, draw: f64, names: &[&str]) -> Result<Option<String>> {
        if !self.template.clarifications.is_empty() {
            let unused: Vec<usize> = (0..self.used_clarifications.len()).filter(|&i| !self.used_clarifications[i]).collect();
            if unused.is_empty() {
                return Ok(None);
            }
            let pick = unused[((draw * unused.len() as f64) as usize).min(unused.len() - 1)];
            self.used_clarifications[pick] = true;
            return Ok(Some(self.template.clarifications[pick].clone()));
        }
        let Some(choice) = choice else { return Ok(None) };
        let w = self.template.ground_truth.as_slice();
        let a = &pool.get(&q.first)?.features;
        let b = &pool.get(&q.second)?.features;
        let c = (0..w.len())
            .max_by(|&i, &j| (w[i] * (a[i] - b[i])).abs().total_cmp(&(w[j] * (a[j] - b[j])).abs()).then(j.cmp(&i)))
            .ok_or_else(|| contract("empty catalog"))?;
        let chosen = match choice {
            Choice::First => "first",
            Choice::Second => "second",
        };
        Ok(Some(format!("I chose the {chosen} one mainly because of {}.", names[c])))
    }
}

//! Request and response bodies.

use conceptpref::domain::{Choice, Provenance, Trajectory};
use conceptpref::envs::homegrid::Episode;
use conceptpref::envs::Environment;
use conceptpref::inference::PosteriorSummary;
use conceptpref::runner::{PendingQuery, SessionConfig, SessionPhase};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvRequest {
    /// `routing` or `homegrid`.
    pub kind: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub n_nodes: Option<usize>,
    #[serde(default)]
    pub pool_size: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CreateSession {
    pub env: EnvRequest,
    /// Free-text instruction. Exactly one of this and `instruction_id`.
    #[serde(default)]
    pub instruction: Option<String>,
    /// A built-in template; the session then reports ground-truth metrics.
    #[serde(default)]
    pub instruction_id: Option<String>,
    pub method: String,
    pub budget: usize,
    #[serde(default)]
    pub seed: u64,
    /// Further session config fields (`oracle`, `k`, `mcmc`, `human`, ...).
    #[serde(default)]
    pub options: Map<String, Value>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChoiceIn {
    First,
    Second,
    Skip,
}

impl ChoiceIn {
    pub fn into_choice(self) -> Option<Choice> {
        match self {
            ChoiceIn::First => Some(Choice::First),
            ChoiceIn::Second => Some(Choice::Second),
            ChoiceIn::Skip => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackBody {
    pub choice: ChoiceIn,
    #[serde(default)]
    pub explanation: Option<String>,
    #[serde(default)]
    pub difficulty: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConceptValue {
    pub name: String,
    pub value: f64,
}

/// MAP weights with the sample spread, per concept.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorView {
    pub concepts: Vec<String>,
    pub map: Vec<f64>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub acceptance_rate: f64,
    pub n_samples: usize,
}

impl PosteriorView {
    pub fn new(env: &Environment, s: PosteriorSummary) -> Self {
        Self {
            concepts: env.pool().catalog.names().map(str::to_owned).collect(),
            map: s.map,
            mean: s.mean,
            sd: s.sd,
            acceptance_rate: s.acceptance_rate,
            n_samples: s.n_samples,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryView {
    pub id: String,
    pub render: String,
    pub features: Vec<ConceptValue>,
    /// `[lat, lon]` per route node.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polyline: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub episode: Option<Episode>,
}

impl TrajectoryView {
    pub fn new(env: &Environment, t: &Trajectory) -> Self {
        let features = env
            .pool()
            .catalog
            .names()
            .zip(&t.features)
            .map(|(name, &value)| ConceptValue { name: name.into(), value })
            .collect();
        let (mut polyline, mut episode) = (None, None);
        match (&t.provenance, env) {
            (Some(Provenance::Route { nodes, .. }), Environment::Routing { graph, .. }) => {
                polyline = nodes.iter().map(|&id| graph.node(id).ok().map(|n| [n.lat, n.lon])).collect();
            }
            (Some(Provenance::Grid { episode: e }), _) => episode = Some(e.clone()),
            _ => {}
        }
        Self { id: t.id.as_str().into(), render: t.render.clone(), features, polyline, episode }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryView {
    pub session_id: String,
    /// Zero-based index of the feedback this query asks for.
    pub iteration: usize,
    pub first: TrajectoryView,
    pub second: TrajectoryView,
    /// Acquisition rank of the chosen pair, for ranked methods.
    pub rank: Option<usize>,
    pub oracle_calls: usize,
    pub approved: Option<bool>,
}

impl QueryView {
    pub fn new(session_id: &str, iteration: usize, env: &Environment, p: &PendingQuery) -> Option<Self> {
        let pool = env.pool();
        Some(Self {
            session_id: session_id.into(),
            iteration,
            first: TrajectoryView::new(env, pool.get(&p.query.first).ok()?),
            second: TrajectoryView::new(env, pool.get(&p.query.second).ok()?),
            rank: p.rank,
            oracle_calls: p.oracle_calls,
            approved: p.approved,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub state: SessionPhase,
    pub iteration: usize,
    pub instruction: String,
    pub template_backed: bool,
    pub config: SessionConfig,
    pub posterior: PosteriorView,
    /// Ids of the outstanding pair, if any.
    pub pending: Option<(String, String)>,
    pub aborted: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeedbackResponse {
    pub session_id: String,
    pub state: SessionPhase,
    /// Feedbacks received so far.
    pub iteration: usize,
    pub posterior: PosteriorView,
}

//! Environments that produce trajectory pools and score learned weights.

pub mod homegrid;
pub mod routing;

use serde::{Deserialize, Serialize};

use crate::domain::{score_trajectory, PreferenceWeights, TrajectoryPool};
use crate::error::{contract, Error, Result};
use homegrid::{build_pool_homegrid, GridPool, HomeGrid};
use routing::{build_pool_routing, generate_synthetic_graph, optimize_route_scaled, route_cost, RoadGraph, RoutingPool};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    Routing,
    HomeGrid,
}

impl std::str::FromStr for EnvKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "routing" => Ok(EnvKind::Routing),
            "homegrid" => Ok(EnvKind::HomeGrid),
            other => Err(Error::Parse(format!("unknown environment '{other}'"))),
        }
    }
}

/// How to generate an environment. Sizes default per kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub kind: EnvKind,
    #[serde(default)]
    pub seed: u64,
    /// Road network size; ignored for the grid.
    #[serde(default)]
    pub n_nodes: Option<usize>,
    /// Trajectories in the pool.
    #[serde(default)]
    pub pool_size: Option<usize>,
}

impl EnvSpec {
    pub fn new(kind: EnvKind, seed: u64) -> Self {
        Self { kind, seed, n_nodes: None, pool_size: None }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "env", rename_all = "snake_case")]
pub enum Environment {
    Routing { graph: RoadGraph, pool: RoutingPool },
    HomeGrid { world: HomeGrid, pool: GridPool },
}

impl Environment {
    pub fn generate(spec: &EnvSpec) -> Result<Self> {
        match spec.kind {
            EnvKind::Routing => {
                let graph = generate_synthetic_graph(spec.n_nodes.unwrap_or(100), spec.seed)?;
                let pool = build_pool_routing(&graph, spec.pool_size.unwrap_or(200), spec.seed)?;
                Ok(Environment::Routing { graph, pool })
            }
            EnvKind::HomeGrid => {
                let world = HomeGrid::kitchen();
                let pool = build_pool_homegrid(&world, spec.pool_size.unwrap_or(60), spec.seed)?;
                Ok(Environment::HomeGrid { world, pool })
            }
        }
    }

    pub fn kind(&self) -> EnvKind {
        match self {
            Environment::Routing { .. } => EnvKind::Routing,
            Environment::HomeGrid { .. } => EnvKind::HomeGrid,
        }
    }

    pub fn pool(&self) -> &TrajectoryPool {
        match self {
            Environment::Routing { pool, .. } => &pool.pool,
            Environment::HomeGrid { pool, .. } => &pool.pool,
        }
    }

    /// Mean excess true cost of acting on `learned` instead of `truth`,
    /// evaluated on the held-out trajectories `eval` (their origin-destination
    /// pairs for routing, the trajectories themselves as a choice set for the grid).
    pub fn expected_cost_delta(&self, learned: &PreferenceWeights, truth: &PreferenceWeights, eval: &[usize]) -> Result<f64> {
        let d = self.pool().dimension();
        for w in [learned, truth] {
            if w.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: w.len() });
            }
        }
        if eval.is_empty() {
            return Err(contract("evaluation set is empty"));
        }
        match self {
            Environment::Routing { graph, pool } => {
                let pairs = eval
                    .iter()
                    .map(|&i| pool.od_pairs.get(i).copied().ok_or_else(|| contract(format!("no pair {i}"))))
                    .collect::<Result<Vec<_>>>()?;
                routing_cost_delta(graph, &pool.normalizer, &pairs, learned, truth)
            }
            Environment::HomeGrid { pool, .. } => choice_cost_delta(&pool.pool, eval, learned, truth),
        }
    }
}

/// Mean over pairs of `cost_true(route_learned) − cost_true(route_true)`, with
/// route costs measured in pool-normalized feature units.
pub fn routing_cost_delta(
    g: &RoadGraph,
    normalizer: &[f64],
    pairs: &[(u64, u64)],
    learned: &PreferenceWeights,
    truth: &PreferenceWeights,
) -> Result<f64> {
    let scale: Vec<f64> = normalizer.iter().map(|n| 1.0 / n).collect();
    let mut total = 0.0;
    for &(s, t) in pairs {
        let (by_learned, _) = optimize_route_scaled(g, s, t, learned.as_slice(), &scale)?;
        let (by_truth, _) = optimize_route_scaled(g, s, t, truth.as_slice(), &scale)?;
        let best = route_cost(g, &by_truth, truth.as_slice(), &scale);
        let got = route_cost(g, &by_learned, truth.as_slice(), &scale);
        total += (got - best).max(0.0);
    }
    Ok(total / pairs.len() as f64)
}

/// Cost gap when choosing the learned-best trajectory from a fixed set.
pub fn choice_cost_delta(pool: &TrajectoryPool, eval: &[usize], learned: &PreferenceWeights, truth: &PreferenceWeights) -> Result<f64> {
    let subset = pool.subset(eval)?;
    let mut pick = None;
    let mut best_true = f64::INFINITY;
    for t in subset.trajectories() {
        let s = score_trajectory(learned, t)?;
        if pick.as_ref().is_none_or(|(ps, _)| s < *ps) {
            pick = Some((s, t));
        }
        best_true = best_true.min(score_trajectory(truth, t)?);
    }
    let (_, chosen) = pick.ok_or_else(|| contract("evaluation set is empty"))?;
    Ok((score_trajectory(truth, chosen)? - best_true).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::NormConstraint;

    fn unit(v: Vec<f64>) -> PreferenceWeights {
        PreferenceWeights::projected(&v, NormConstraint::UnitL2Nonnegative).unwrap()
    }

    #[test]
    fn identical_or_scaled_weights_cost_nothing() {
        for kind in [EnvKind::Routing, EnvKind::HomeGrid] {
            let env = Environment::generate(&EnvSpec { kind, seed: 3, n_nodes: Some(36), pool_size: Some(40) }).unwrap();
            let d = env.pool().dimension();
            let w = unit((0..d).map(|i| 1.0 + i as f64).collect());
            let eval: Vec<usize> = (0..20).collect();
            assert_eq!(env.expected_cost_delta(&w, &w, &eval).unwrap(), 0.0);
            let doubled = PreferenceWeights::unconstrained(w.as_slice().iter().map(|x| 2.0 * x).collect()).unwrap();
            assert_eq!(env.expected_cost_delta(&doubled, &w, &eval).unwrap(), 0.0);
            let other = unit((0..d).map(|i| if i == 0 { 1.0 } else { 0.01 }).collect());
            assert!(env.expected_cost_delta(&other, &w, &eval).unwrap() >= 0.0);
        }
    }

    #[test]
    fn env_kind_parses() {
        assert_eq!("home-grid".parse::<EnvKind>().unwrap(), EnvKind::HomeGrid);
        assert_eq!("routing".parse::<EnvKind>().unwrap(), EnvKind::Routing);
        assert!("maze".parse::<EnvKind>().is_err());
    }
}

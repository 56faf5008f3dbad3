#![allow(dead_code)]

use conceptpref::domain::{NormConstraint, PreferenceWeights, Trajectory, TrajectoryPool};
use conceptpref::envs::routing::{edge_cost, routing_catalog, Edge, Node, RoadGraph, N_ROUTING_CONCEPTS};
use conceptpref::inference::random_point;
use conceptpref::seed;
use rand::Rng;

/// Random directed multigraph on `n` nodes, some parallel edges, features in [0, 1].
pub fn random_graph(n: usize, seed: u64) -> RoadGraph {
    let mut rng = seed::stream(seed, "test-graph", 0);
    let nodes = (0..n as u64).map(|id| Node { id, lat: 0.0, lon: id as f64 }).collect();
    let mut edges = Vec::new();
    for a in 0..n as u64 {
        for b in 0..n as u64 {
            if a == b || rng.random::<f64>() > 0.35 {
                continue;
            }
            let copies = if rng.random::<f64>() < 0.1 { 2 } else { 1 };
            for _ in 0..copies {
                edges.push(Edge {
                    from: a,
                    to: b,
                    length: rng.random_range(1.0..500.0),
                    features: (0..N_ROUTING_CONCEPTS).map(|_| rng.random::<f64>()).collect(),
                });
            }
        }
    }
    RoadGraph::new(nodes, edges).unwrap()
}

pub fn random_weights(d: usize, seed: u64) -> PreferenceWeights {
    let c = NormConstraint::UnitL2Nonnegative;
    PreferenceWeights::new(random_point(&mut seed::stream(seed, "test-weights", 0), d, c), c).unwrap()
}

/// Cheapest simple path by exhaustive enumeration: (edge indices, cost), or
/// `None` when unreachable. Costs accumulate from the source, edge by edge.
pub fn brute_force_route(g: &RoadGraph, s: u64, d: u64, w: &[f64]) -> Option<(Vec<usize>, f64)> {
    if s == d {
        return Some((vec![], 0.0));
    }
    let unit = [1.0; N_ROUTING_CONCEPTS];
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut visited = vec![s];
    let mut path = Vec::new();
    fn dfs(
        g: &RoadGraph,
        at: u64,
        d: u64,
        cost: f64,
        w: &[f64],
        unit: &[f64],
        visited: &mut Vec<u64>,
        path: &mut Vec<usize>,
        best: &mut Option<(Vec<usize>, f64)>,
    ) {
        if at == d {
            if best.as_ref().is_none_or(|(_, c)| cost < *c) {
                *best = Some((path.clone(), cost));
            }
            return;
        }
        for (i, e) in g.edges().iter().enumerate() {
            if e.from != at || visited.contains(&e.to) {
                continue;
            }
            visited.push(e.to);
            path.push(i);
            dfs(g, e.to, d, cost + edge_cost(e, w, unit), w, unit, visited, path, best);
            path.pop();
            visited.pop();
        }
    }
    dfs(g, s, d, 0.0, w, &unit, &mut visited, &mut path, &mut best);
    best
}

/// `n` trajectories with independent uniform features on the routing catalog.
pub fn uniform_pool(n: usize, seed: u64) -> TrajectoryPool {
    let mut rng = seed::stream(seed, "uniform-pool", 0);
    let ts = (0..n)
        .map(|i| {
            let f = (0..N_ROUTING_CONCEPTS).map(|_| rng.random::<f64>()).collect();
            Trajectory::new(format!("t{i:03}"), f, format!("trajectory {i}"), None).unwrap()
        })
        .collect();
    TrajectoryPool::new(routing_catalog(), "synthetic", serde_json::Value::Null, ts).unwrap()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard error of the mean.
pub fn se(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let n = xs.len() as f64;
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0) / n).sqrt()
}

//! Road-network routing with ten cost-like concepts.
//!
//! Edge features are per-meter costs in `[0, 1]`; a route's raw concept value
//! is the length-weighted sum over its edges, and pool features divide that
//! by the per-concept maximum over the pool.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Concept, ConceptCatalog, PreferenceWeights, Provenance, Trajectory, TrajectoryPool};
use crate::error::{contract, Error, Result};
use crate::inference::random_point;
use crate::domain::NormConstraint;
use crate::seed;

pub const N_ROUTING_CONCEPTS: usize = 10;

const CONCEPTS: [(&str, &str); N_ROUTING_CONCEPTS] = [
    ("Time", "Travel time; higher means a slower, longer trip."),
    ("Speed", "Lack of speed; higher means lower speed limits."),
    ("Safety", "Accident risk; higher means less safe roads."),
    ("Scenic", "Lack of scenery; higher means less scenic views."),
    ("Battery Friendly", "Battery drain; higher means more energy used."),
    ("Gas Station Nearby", "Distance from gas stations; higher means fewer nearby."),
    ("Charging Station Nearby", "Distance from charging stations; higher means fewer nearby."),
    ("Human Driving Friendly", "Driving difficulty for a human; higher means harder."),
    ("Battery ReGen Friendly", "Lack of regenerative braking opportunity; higher means less regen."),
    ("Autopilot Friendly", "Unsuitability for driver assistance; higher means less suitable."),
];

pub fn routing_catalog() -> ConceptCatalog {
    ConceptCatalog::new(CONCEPTS.iter().map(|(n, d)| Concept::new(*n, *d)).collect())
        .expect("static catalog is valid")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: u64,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: u64,
    pub to: u64,
    /// Meters.
    pub length: f64,
    pub features: Vec<f64>,
}

/// Directed road graph. Serialized as `{nodes: [...], edges: [...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "GraphRepr", into = "GraphRepr")]
pub struct RoadGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    node_index: HashMap<u64, usize>,
    /// Outgoing edge indices per node position.
    adjacency: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
}

impl TryFrom<GraphRepr> for RoadGraph {
    type Error = Error;
    fn try_from(r: GraphRepr) -> Result<Self> {
        RoadGraph::new(r.nodes, r.edges)
    }
}

impl From<RoadGraph> for GraphRepr {
    fn from(g: RoadGraph) -> Self {
        GraphRepr { nodes: g.nodes, edges: g.edges }
    }
}

impl PartialEq for RoadGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edges == other.edges
    }
}

impl RoadGraph {
    pub fn new(nodes: Vec<Node>, edges: Vec<Edge>) -> Result<Self> {
        let mut node_index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if !(n.lat.is_finite() && n.lon.is_finite()) {
                return Err(Error::Parse(format!("node {} has non-finite coordinates", n.id)));
            }
            if node_index.insert(n.id, i).is_some() {
                return Err(Error::Parse(format!("duplicate node id {}", n.id)));
            }
        }
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (i, e) in edges.iter().enumerate() {
            let bad = |why: String| Error::Parse(format!("edge {i} ({} -> {}): {why}", e.from, e.to));
            let from = *node_index.get(&e.from).ok_or_else(|| bad(format!("unknown node {}", e.from)))?;
            if !node_index.contains_key(&e.to) {
                return Err(bad(format!("unknown node {}", e.to)));
            }
            if !(e.length.is_finite() && e.length > 0.0) {
                return Err(bad(format!("length {} is not positive", e.length)));
            }
            if e.features.len() != N_ROUTING_CONCEPTS {
                return Err(bad(format!("expected {N_ROUTING_CONCEPTS} features, got {}", e.features.len())));
            }
            if let Some(x) = e.features.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                return Err(bad(format!("feature {x} outside [0, 1]")));
            }
            adjacency[from].push(i);
        }
        Ok(Self { nodes, edges, node_index, adjacency })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, id: u64) -> Result<&Node> {
        Ok(&self.nodes[self.position(id)?])
    }

    fn position(&self, id: u64) -> Result<usize> {
        self.node_index.get(&id).copied().ok_or_else(|| contract(format!("unknown node {id}")))
    }

    pub fn outgoing(&self, id: u64) -> Result<impl Iterator<Item = (usize, &Edge)>> {
        let pos = self.position(id)?;
        Ok(self.adjacency[pos].iter().map(move |&i| (i, &self.edges[i])))
    }

    /// Every node reachable from every other along directed edges.
    pub fn is_strongly_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return true;
        }
        let mut reverse = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            reverse[self.node_index[&e.to]].push(self.node_index[&e.from]);
        }
        let forward: Vec<Vec<usize>> = self
            .adjacency
            .iter()
            .map(|out| out.iter().map(|&i| self.node_index[&self.edges[i].to]).collect())
            .collect();
        let covers = |adj: &[Vec<usize>]| {
            let mut seen = vec![false; adj.len()];
            let mut queue = VecDeque::from([0usize]);
            seen[0] = true;
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        covers(&forward) && covers(&reverse)
    }

    /// Resolves a node sequence to edges, taking the shortest of any parallel edges.
    pub fn resolve_path(&self, nodes: &[u64]) -> Result<Vec<usize>> {
        nodes
            .windows(2)
            .map(|w| {
                self.outgoing(w[0])?
                    .filter(|(_, e)| e.to == w[1])
                    .min_by(|a, b| a.1.length.total_cmp(&b.1.length))
                    .map(|(i, _)| i)
                    .ok_or_else(|| contract(format!("no edge {} -> {}", w[0], w[1])))
            })
            .collect()
    }
}

/// A path through the graph as both nodes and the edges taken.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub nodes: Vec<u64>,
    pub edges: Vec<usize>,
}

impl Route {
    pub fn from_nodes(g: &RoadGraph, nodes: Vec<u64>) -> Result<Self> {
        let edges = g.resolve_path(&nodes)?;
        Ok(Self { nodes, edges })
    }

    pub fn length(&self, g: &RoadGraph) -> f64 {
        self.edges.iter().map(|&i| g.edges[i].length).sum()
    }

    fn check(&self, g: &RoadGraph) -> Result<()> {
        if self.edges.len() + 1 != self.nodes.len().max(1) {
            return Err(contract("route nodes and edges disagree"));
        }
        for (k, &i) in self.edges.iter().enumerate() {
            let e = g.edges.get(i).ok_or_else(|| contract(format!("unknown edge {i}")))?;
            if e.from != self.nodes[k] || e.to != self.nodes[k + 1] {
                return Err(contract(format!("edge {i} does not join {} -> {}", self.nodes[k], self.nodes[k + 1])));
            }
        }
        Ok(())
    }
}

/// Unnormalized concept values: `Σ_e features_c(e) · length(e)`.
pub fn route_features_raw(g: &RoadGraph, route: &Route) -> Result<Vec<f64>> {
    route.check(g)?;
    let mut acc = vec![0.0; N_ROUTING_CONCEPTS];
    for &i in &route.edges {
        let e = &g.edges[i];
        acc.iter_mut().zip(&e.features).for_each(|(a, f)| *a += f * e.length);
    }
    Ok(acc)
}

/// Concept values divided by the pool's per-concept normalizers.
pub fn route_features(g: &RoadGraph, route: &Route, normalizer: &[f64]) -> Result<Vec<f64>> {
    let raw = route_features_raw(g, route)?;
    if normalizer.len() != raw.len() {
        return Err(Error::DimensionMismatch { expected: raw.len(), got: normalizer.len() });
    }
    Ok(raw.iter().zip(normalizer).map(|(r, n)| r / n).collect())
}

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry {
    cost: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Per-edge cost `Σ_c w_c · scale_c · features_c(e) · length(e)`.
pub fn edge_cost(e: &Edge, w: &[f64], scale: &[f64]) -> f64 {
    e.features.iter().zip(w).zip(scale).map(|((f, w), s)| w * s * f).sum::<f64>() * e.length
}

/// Minimum-cost route under nonnegative weights (Dijkstra).
pub fn optimize_route(g: &RoadGraph, source: u64, dest: u64, w: &PreferenceWeights) -> Result<(Route, f64)> {
    optimize_route_scaled(g, source, dest, w.as_slice(), &[1.0; N_ROUTING_CONCEPTS])
}

/// As [`optimize_route`], with each concept's weight multiplied by `scale`.
pub fn optimize_route_scaled(g: &RoadGraph, source: u64, dest: u64, w: &[f64], scale: &[f64]) -> Result<(Route, f64)> {
    if w.len() != N_ROUTING_CONCEPTS || scale.len() != N_ROUTING_CONCEPTS {
        return Err(Error::DimensionMismatch { expected: N_ROUTING_CONCEPTS, got: w.len().min(scale.len()) });
    }
    if w.iter().chain(scale).any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::Constraint("route optimization needs finite nonnegative weights".into()));
    }
    let src = g.position(source)?;
    let dst = g.position(dest)?;
    if src == dst {
        return Ok((Route { nodes: vec![source], edges: vec![] }, 0.0));
    }
    let n = g.nodes.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut via: Vec<Option<usize>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(HeapEntry { cost: 0.0, node: src });
    while let Some(HeapEntry { cost, node }) = heap.pop() {
        if cost > dist[node] {
            continue;
        }
        if node == dst {
            break;
        }
        for &ei in &g.adjacency[node] {
            let e = &g.edges[ei];
            let next = g.node_index[&e.to];
            let c = cost + edge_cost(e, w, scale);
            if c < dist[next] {
                dist[next] = c;
                via[next] = Some(ei);
                heap.push(HeapEntry { cost: c, node: next });
            }
        }
    }
    if !dist[dst].is_finite() {
        return Err(Error::NoRoute { from: source, to: dest });
    }
    let mut edges = Vec::new();
    let mut at = dst;
    while let Some(ei) = via[at] {
        edges.push(ei);
        at = g.node_index[&g.edges[ei].from];
        if at == src {
            break;
        }
    }
    edges.reverse();
    let mut nodes = vec![source];
    nodes.extend(edges.iter().map(|&i| g.edges[i].to));
    Ok((Route { nodes, edges }, dist[dst]))
}

/// Summed cost of a route under weights and per-concept scales, accumulated
/// edge by edge from the source.
pub fn route_cost(g: &RoadGraph, route: &Route, w: &[f64], scale: &[f64]) -> f64 {
    route.edges.iter().fold(0.0, |acc, &i| acc + edge_cost(&g.edges[i], w, scale))
}

#[derive(Clone, Copy, Debug)]
struct Bump {
    x: f64,
    y: f64,
    radius: f64,
    height: f64,
}

fn field(bumps: &[Bump], x: f64, y: f64) -> f64 {
    bumps
        .iter()
        .map(|b| b.height * (-((x - b.x).powi(2) + (y - b.y).powi(2)) / (2.0 * b.radius * b.radius)).exp())
        .sum()
}

fn random_bumps(rng: &mut ChaCha8Rng, n: usize) -> Vec<Bump> {
    (0..n)
        .map(|_| Bump {
            x: rng.random(),
            y: rng.random(),
            radius: rng.random_range(0.08..0.25),
            height: rng.random_range(0.5..1.0),
        })
        .collect()
}

fn haversine_m(a: &Node, b: &Node) -> f64 {
    let r = 6_371_000.0;
    let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
    let dp = p2 - p1;
    let dl = (b.lon - a.lon).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * r * h.sqrt().asin()
}

#[derive(Clone, Copy, PartialEq)]
enum RoadClass {
    Highway,
    Arterial,
    Residential,
    Rural,
}

/// Connected perturbed-grid road network with spatially correlated features.
pub fn generate_synthetic_graph(n_nodes: usize, seed: u64) -> Result<RoadGraph> {
    if n_nodes < 2 {
        return Err(contract("a road network needs at least two nodes"));
    }
    for attempt in 0..64 {
        let g = synthesize(n_nodes, seed::derive_seed(seed, "road-graph", attempt))?;
        if g.is_strongly_connected() {
            return Ok(g);
        }
    }
    Err(Error::Initialization(format!("could not generate a connected {n_nodes}-node graph")))
}

fn synthesize(n_nodes: usize, seed: u64) -> Result<RoadGraph> {
    let mut rng = seed::stream(seed, "synth", 0);
    let cols = (n_nodes as f64).sqrt().ceil() as usize;
    let rows = n_nodes.div_ceil(cols);
    let spacing = 0.004;
    let (lat0, lon0) = (42.37, -72.53);
    let unit = |r: usize, c: usize| (c as f64 / cols.max(2).saturating_sub(1) as f64, r as f64 / rows.max(2).saturating_sub(1) as f64);

    let nodes: Vec<Node> = (0..n_nodes)
        .map(|i| {
            let (r, c) = (i / cols, i % cols);
            Node {
                id: i as u64,
                lat: lat0 + r as f64 * spacing + rng.random_range(-0.3..0.3) * spacing,
                lon: lon0 + c as f64 * spacing * 1.35 + rng.random_range(-0.3..0.3) * spacing,
            }
        })
        .collect();

    let elevation = random_bumps(&mut rng, 4);
    let scenery = random_bumps(&mut rng, 3);
    let danger = random_bumps(&mut rng, 3);
    let gas: Vec<(f64, f64)> = (0..3).map(|_| (rng.random(), rng.random())).collect();
    let chargers: Vec<(f64, f64)> = (0..2).map(|_| (rng.random(), rng.random())).collect();
    let highway_row = rng.random_range(0..rows);
    let highway_col = rng.random_range(0..cols);
    let arterial_every = 3;

    let nearest = |sites: &[(f64, f64)], x: f64, y: f64| {
        sites.iter().map(|(sx, sy)| ((x - sx).powi(2) + (y - sy).powi(2)).sqrt()).fold(f64::INFINITY, f64::min)
    };

    let mut edges = Vec::new();
    for i in 0..n_nodes {
        let (r, c) = (i / cols, i % cols);
        let mut links = Vec::new();
        if c + 1 < cols && i + 1 < n_nodes {
            links.push((i + 1, r == highway_row));
        }
        if i + cols < n_nodes {
            links.push((i + cols, c == highway_col));
        }
        for (j, on_highway) in links {
            // a few residential links are missing, like dead ends
            if !on_highway && rng.random::<f64>() < 0.08 {
                continue;
            }
            let (rj, cj) = (j / cols, j % cols);
            let class = if on_highway {
                RoadClass::Highway
            } else if r % arterial_every == 0 && rj == r || c % arterial_every == 0 && cj == c {
                RoadClass::Arterial
            } else if rng.random::<f64>() < 0.3 {
                RoadClass::Rural
            } else {
                RoadClass::Residential
            };
            let (xa, ya) = unit(r, c);
            let (xb, yb) = unit(rj, cj);
            let (mx, my) = (0.5 * (xa + xb), 0.5 * (ya + yb));
            let length = haversine_m(&nodes[i], &nodes[j]).max(1.0);
            let congestion: f64 = rng.random_range(0.0..0.15);
            let difficulty_noise: f64 = rng.random_range(-0.1..0.1);
            let (speed_kmh, base_risk, autopilot_cost, complexity) = match class {
                RoadClass::Highway => (100.0, 0.35, 0.05, 0.25),
                RoadClass::Arterial => (60.0, 0.5, 0.35, 0.55),
                RoadClass::Residential => (40.0, 0.25, 0.8, 0.4),
                RoadClass::Rural => (70.0, 0.55, 0.6, 0.5),
            };
            let scenic = field(&scenery, mx, my).min(1.0) * if class == RoadClass::Highway { 0.4 } else { 1.0 };
            let risk = (base_risk + 0.5 * field(&danger, mx, my)).min(1.0);
            let gas_cost = (nearest(&gas, mx, my) * 2.0).min(1.0);
            let charge_cost = (nearest(&chargers, mx, my) * 2.0).min(1.0);
            let stop_and_go = matches!(class, RoadClass::Residential | RoadClass::Arterial);
            for (a, b, ha, hb) in [
                (i, j, field(&elevation, xa, ya), field(&elevation, xb, yb)),
                (j, i, field(&elevation, xb, yb), field(&elevation, xa, ya)),
            ] {
                let climb = (hb - ha).clamp(-1.0, 1.0);
                let drain = (0.3 + 0.4 * speed_kmh / 100.0 + 0.3 * climb).clamp(0.0, 1.0);
                let regen = (0.6 - 0.5 * (-climb).max(0.0) - if stop_and_go { 0.25 } else { 0.0 }).clamp(0.0, 1.0);
                let features = vec![
                    (40.0 / speed_kmh + congestion).min(1.0),
                    1.0 - speed_kmh / 110.0,
                    risk,
                    1.0 - scenic,
                    drain,
                    gas_cost,
                    charge_cost,
                    (complexity + difficulty_noise).clamp(0.0, 1.0),
                    regen,
                    autopilot_cost,
                ];
                edges.push(Edge { from: a as u64, to: b as u64, length, features });
            }
        }
    }
    RoadGraph::new(nodes, edges)
}

/// A routing trajectory pool plus what is needed to re-derive its features.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RoutingPool {
    pub pool: TrajectoryPool,
    /// Per-concept maximum of raw route values over the pool.
    pub normalizer: Vec<f64>,
    pub od_pairs: Vec<(u64, u64)>,
    /// The weights each route is optimal for.
    pub weights: Vec<Vec<f64>>,
}

fn render_route(id: &str, g: &RoadGraph, route: &Route, features: &[f64]) -> String {
    let km = route.length(g) / 1000.0;
    let summary = CONCEPTS
        .iter()
        .zip(features)
        .map(|((name, _), v)| format!("{name} {v:.2}"))
        .collect::<Vec<_>>()
        .join(", ");
    format!(
        "Route {id}: {km:.2} km over {} road segments from node {} to node {}. Concept costs (0 best, 1 worst): {summary}.",
        route.edges.len(),
        route.nodes.first().copied().unwrap_or_default(),
        route.nodes.last().copied().unwrap_or_default(),
    )
}

/// Endpoint separation, as fractions of the bounding-box diagonal.
const OD_BAND: (f64, f64) = (0.4, 0.6);

fn bounding_box(nodes: &[Node]) -> (Node, Node) {
    let fold = |f: fn(f64, f64) -> f64, init: f64, get: fn(&Node) -> f64| nodes.iter().map(get).fold(init, f);
    let lo = Node { id: 0, lat: fold(f64::min, f64::INFINITY, |n| n.lat), lon: fold(f64::min, f64::INFINITY, |n| n.lon) };
    let hi = Node { id: 0, lat: fold(f64::max, f64::NEG_INFINITY, |n| n.lat), lon: fold(f64::max, f64::NEG_INFINITY, |n| n.lon) };
    (lo, hi)
}

/// Optimal routes under random weights between random origin-destination
/// pairs whose separation lies in a fixed band of the network's extent.
pub fn build_pool_routing(g: &RoadGraph, n_pairs: usize, seed: u64) -> Result<RoutingPool> {
    if n_pairs == 0 {
        return Err(contract("pool needs at least one pair"));
    }
    if g.nodes.len() < 2 {
        return Err(contract("graph needs at least two nodes"));
    }
    let mut rng = seed::stream(seed, "routing-pool", 0);
    let mut routes = Vec::with_capacity(n_pairs);
    let mut od_pairs = Vec::with_capacity(n_pairs);
    let mut weights = Vec::with_capacity(n_pairs);
    let unit = [1.0; N_ROUTING_CONCEPTS];
    // Endpoints a similar distance apart, so routes differ by character
    // rather than mostly by length.
    let (lo, hi) = bounding_box(&g.nodes);
    let span = haversine_m(&lo, &hi);
    let band = (OD_BAND.0 * span, OD_BAND.1 * span);
    while routes.len() < n_pairs {
        let mut found = None;
        for _ in 0..10_000 {
            let a = &g.nodes[rng.random_range(0..g.nodes.len())];
            let b = &g.nodes[rng.random_range(0..g.nodes.len())];
            let sep = haversine_m(a, b);
            if a.id == b.id || (span > 0.0 && !(band.0..=band.1).contains(&sep)) {
                continue;
            }
            let (s, d) = (a.id, b.id);
            let w = random_point(&mut rng, N_ROUTING_CONCEPTS, NormConstraint::UnitL2Nonnegative);
            match optimize_route_scaled(g, s, d, &w, &unit) {
                Ok((route, _)) => {
                    found = Some((s, d, route, w));
                    break;
                }
                Err(Error::NoRoute { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        let (s, d, route, w) = found.ok_or_else(|| contract("could not find reachable origin-destination pairs"))?;
        od_pairs.push((s, d));
        weights.push(w);
        routes.push(route);
    }
    let raws = routes.iter().map(|r| route_features_raw(g, r)).collect::<Result<Vec<_>>>()?;
    let normalizer: Vec<f64> = (0..N_ROUTING_CONCEPTS)
        .map(|c| {
            let m = raws.iter().map(|r| r[c]).fold(0.0, f64::max);
            if m > 0.0 { m } else { 1.0 }
        })
        .collect();
    let width = (n_pairs.saturating_sub(1)).to_string().len().max(3);
    let trajectories = routes
        .into_iter()
        .zip(&raws)
        .enumerate()
        .map(|(i, (route, raw))| {
            let features: Vec<f64> = raw.iter().zip(&normalizer).map(|(r, n)| r / n).collect();
            let id = format!("r{i:0width$}");
            let render = render_route(&id, g, &route, &features);
            Trajectory::new(id, features, render, Some(Provenance::Route { nodes: route.nodes, edges: route.edges }))
        })
        .collect::<Result<Vec<_>>>()?;
    let generation = serde_json::json!({
        "env": "routing",
        "n_pairs": n_pairs,
        "seed": seed,
        "n_nodes": g.nodes.len(),
        "normalizer": normalizer,
    });
    let pool = TrajectoryPool::new(routing_catalog(), "routing", generation, trajectories)?;
    Ok(RoutingPool { pool, normalizer, od_pairs, weights })
}

//! A 12×14 kitchen grid where an agent carries objects between surfaces.
//!
//! Concepts count undesirable events in an episode: bumping furniture,
//! bumping walls, and putting objects on the floor, the stove or the
//! left-hand chair.

use std::collections::{BTreeMap, VecDeque};

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Concept, ConceptCatalog, Provenance, Trajectory, TrajectoryPool};
use crate::error::{contract, Result};
use crate::seed;

pub const WIDTH: usize = 12;
pub const HEIGHT: usize = 14;
pub const N_GRID_CONCEPTS: usize = 5;

const LAYOUT: [&str; HEIGHT] = [
    "############",
    "#....TT....#",
    "#....TT....#",
    "#L........S#",
    "#.........S#",
    "#..C.......#",
    "#..TT...C..#",
    "#..TT......#",
    "#..........#",
    "#.S....L...#",
    "#......TT..#",
    "#..C...TT..#",
    "#..........#",
    "############",
];

const CONCEPTS: [(&str, &str); N_GRID_CONCEPTS] = [
    ("Object Collision", "Times the agent bumps into furniture or objects."),
    ("Wall Collision", "Times the agent bumps into a wall."),
    ("Floor Placement", "Objects put down on the floor."),
    ("Stove Placement", "Objects put down on the stove."),
    ("Left Chair Placement", "Objects put down on the left-hand chair."),
];

pub fn homegrid_catalog() -> ConceptCatalog {
    ConceptCatalog::new(CONCEPTS.iter().map(|(n, d)| Concept::new(*n, *d)).collect())
        .expect("static catalog is valid")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cell {
    Empty,
    Wall,
    Table,
    Chair,
    LeftChair,
    Stove,
}

impl Cell {
    fn from_char(c: char) -> Self {
        match c {
            '#' => Cell::Wall,
            'T' => Cell::Table,
            'C' => Cell::Chair,
            'L' => Cell::LeftChair,
            'S' => Cell::Stove,
            _ => Cell::Empty,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Cell::Empty => "floor",
            Cell::Wall => "wall",
            Cell::Table => "table",
            Cell::Chair => "chair",
            Cell::LeftChair => "left chair",
            Cell::Stove => "stove",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Item {
    Bottle,
    Plate,
    Cup,
}

impl Item {
    fn label(self) -> &'static str {
        match self {
            Item::Bottle => "bottle",
            Item::Plate => "plate",
            Item::Cup => "cup",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dir {
    Up,
    Down,
    Left,
    Right,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::Up, Dir::Down, Dir::Left, Dir::Right];

    fn step(self, (x, y): (usize, usize)) -> Option<(usize, usize)> {
        match self {
            Dir::Up => y.checked_sub(1).map(|y| (x, y)),
            Dir::Down => Some((x, y + 1)),
            Dir::Left => x.checked_sub(1).map(|x| (x, y)),
            Dir::Right => Some((x + 1, y)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridAction {
    Move(Dir),
    /// Pick up the object on the adjacent cell in this direction.
    Pickup(Dir),
    /// Put the held object on the adjacent cell in this direction.
    Place(Dir),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub start: (usize, usize),
    pub actions: Vec<GridAction>,
}

/// Static layout plus where the objects start.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomeGrid {
    cells: Vec<Cell>,
    objects: BTreeMap<Item, (usize, usize)>,
}

impl Default for HomeGrid {
    fn default() -> Self {
        Self::kitchen()
    }
}

impl HomeGrid {
    pub fn kitchen() -> Self {
        let cells = LAYOUT.iter().flat_map(|row| row.chars().map(Cell::from_char)).collect();
        let objects = BTreeMap::from([(Item::Bottle, (5, 1)), (Item::Plate, (3, 6)), (Item::Cup, (7, 10))]);
        Self { cells, objects }
    }

    pub fn cell(&self, (x, y): (usize, usize)) -> Cell {
        if x >= WIDTH || y >= HEIGHT {
            Cell::Wall
        } else {
            self.cells[y * WIDTH + x]
        }
    }

    pub fn objects(&self) -> &BTreeMap<Item, (usize, usize)> {
        &self.objects
    }

    fn walkable(&self, p: (usize, usize), objects: &BTreeMap<Item, (usize, usize)>) -> bool {
        self.cell(p) == Cell::Empty && !objects.values().any(|&o| o == p)
    }
}

/// Event counts for one episode.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub object_collisions: u32,
    pub wall_collisions: u32,
    pub floor_placements: u32,
    pub stove_placements: u32,
    pub left_chair_placements: u32,
    /// (item, surface label) for each placement, in order.
    pub placements: Vec<(Item, String)>,
    pub pickups: Vec<Item>,
    pub end: (usize, usize),
}

impl Outcome {
    pub fn features(&self) -> Vec<f64> {
        [
            self.object_collisions,
            self.wall_collisions,
            self.floor_placements,
            self.stove_placements,
            self.left_chair_placements,
        ]
        .iter()
        .map(|&c| c as f64)
        .collect()
    }
}

struct State<'a> {
    world: &'a HomeGrid,
    pos: (usize, usize),
    holding: Option<Item>,
    objects: BTreeMap<Item, (usize, usize)>,
    outcome: Outcome,
}

impl<'a> State<'a> {
    fn new(world: &'a HomeGrid, start: (usize, usize)) -> Result<Self> {
        if !world.walkable(start, &world.objects) {
            return Err(contract(format!("start {start:?} is not a free floor cell")));
        }
        Ok(Self { world, pos: start, holding: None, objects: world.objects.clone(), outcome: Outcome::default() })
    }

    fn item_at(&self, p: (usize, usize)) -> Option<Item> {
        self.objects.iter().find(|(_, &q)| q == p).map(|(&i, _)| i)
    }

    fn apply(&mut self, action: GridAction) -> Result<()> {
        match action {
            GridAction::Move(d) => match d.step(self.pos) {
                None => self.outcome.wall_collisions += 1,
                Some(next) => match self.world.cell(next) {
                    Cell::Wall => self.outcome.wall_collisions += 1,
                    Cell::Empty if self.item_at(next).is_none() => self.pos = next,
                    _ => self.outcome.object_collisions += 1,
                },
            },
            GridAction::Pickup(d) => {
                if self.holding.is_some() {
                    return Err(contract("pickup while already holding an object"));
                }
                let target = d.step(self.pos).ok_or_else(|| contract("pickup outside the grid"))?;
                let item = self.item_at(target).ok_or_else(|| contract(format!("nothing to pick up at {target:?}")))?;
                self.objects.remove(&item);
                self.holding = Some(item);
                self.outcome.pickups.push(item);
            }
            GridAction::Place(d) => {
                let item = self.holding.ok_or_else(|| contract("place with empty hands"))?;
                let target = d.step(self.pos).ok_or_else(|| contract("place outside the grid"))?;
                let cell = self.world.cell(target);
                if cell == Cell::Wall {
                    return Err(contract(format!("cannot place on a wall at {target:?}")));
                }
                if cell == Cell::Empty && self.item_at(target).is_some() {
                    return Err(contract(format!("floor cell {target:?} is occupied")));
                }
                match cell {
                    Cell::Empty => self.outcome.floor_placements += 1,
                    Cell::Stove => self.outcome.stove_placements += 1,
                    Cell::LeftChair => self.outcome.left_chair_placements += 1,
                    _ => {}
                }
                self.objects.insert(item, target);
                self.holding = None;
                self.outcome.placements.push((item, cell.label().to_string()));
            }
        }
        Ok(())
    }
}

/// Replays an episode and counts concept events.
pub fn simulate(world: &HomeGrid, episode: &Episode) -> Result<Outcome> {
    let mut s = State::new(world, episode.start)?;
    for &a in &episode.actions {
        s.apply(a)?;
    }
    s.outcome.end = s.pos;
    Ok(s.outcome)
}

/// Raw concept counts for an episode.
pub fn grid_features(world: &HomeGrid, episode: &Episode) -> Result<Vec<f64>> {
    Ok(simulate(world, episode)?.features())
}

/// Shortest sequence of moves from `from` to any cell adjacent to `target`,
/// returning the moves and the direction from the final cell to `target`.
fn path_next_to(
    world: &HomeGrid,
    objects: &BTreeMap<Item, (usize, usize)>,
    from: (usize, usize),
    target: (usize, usize),
) -> Option<(Vec<Dir>, Dir)> {
    let mut prev: BTreeMap<(usize, usize), ((usize, usize), Dir)> = BTreeMap::new();
    let mut queue = VecDeque::from([from]);
    let mut seen = vec![false; WIDTH * HEIGHT];
    seen[from.1 * WIDTH + from.0] = true;
    while let Some(p) = queue.pop_front() {
        if let Some(face) = Dir::ALL.into_iter().find(|d| d.step(p) == Some(target)) {
            let mut moves = Vec::new();
            let mut at = p;
            while let Some(&(q, d)) = prev.get(&at) {
                moves.push(d);
                at = q;
            }
            moves.reverse();
            return Some((moves, face));
        }
        for d in Dir::ALL {
            if let Some(n) = d.step(p) {
                if world.walkable(n, objects) && !seen[n.1 * WIDTH + n.0] {
                    seen[n.1 * WIDTH + n.0] = true;
                    prev.insert(n, (p, d));
                    queue.push_back(n);
                }
            }
        }
    }
    None
}

fn cells_of(world: &HomeGrid, kind: Cell) -> Vec<(usize, usize)> {
    (0..HEIGHT)
        .flat_map(|y| (0..WIDTH).map(move |x| (x, y)))
        .filter(|&p| world.cell(p) == kind)
        .collect()
}

/// Scripted episode: optional wandering, then one or two carry tasks.
fn scripted_episode(world: &HomeGrid, rng: &mut ChaCha8Rng) -> Result<Episode> {
    let floor = cells_of(world, Cell::Empty);
    let free: Vec<_> = floor.iter().copied().filter(|p| world.walkable(*p, &world.objects)).collect();
    let start = *free.choose(rng).expect("kitchen has free cells");
    let mut state = State::new(world, start)?;
    let mut actions = Vec::new();
    let clumsiness: f64 = [0.0, 0.0, 0.3, 0.6, 1.0].choose(rng).copied().unwrap_or(0.0);

    let wander = |state: &mut State, actions: &mut Vec<GridAction>, rng: &mut ChaCha8Rng| -> Result<()> {
        let n = (clumsiness * rng.random_range(0..8) as f64).round() as usize;
        for _ in 0..n {
            let a = GridAction::Move(*Dir::ALL.choose(rng).expect("nonempty"));
            state.apply(a)?;
            actions.push(a);
        }
        Ok(())
    };

    let n_tasks = if rng.random::<f64>() < 0.35 { 2 } else { 1 };
    for _ in 0..n_tasks {
        wander(&mut state, &mut actions, rng)?;
        let items: Vec<Item> = state.objects.keys().copied().collect();
        let Some(&item) = items.choose(rng) else { break };
        let at = state.objects[&item];
        let Some((moves, face)) = path_next_to(world, &state.objects, state.pos, at) else { continue };
        for d in moves {
            state.apply(GridAction::Move(d))?;
            actions.push(GridAction::Move(d));
        }
        state.apply(GridAction::Pickup(face))?;
        actions.push(GridAction::Pickup(face));

        wander(&mut state, &mut actions, rng)?;
        let surface = match rng.random_range(0..10) {
            0..=3 => Cell::Table,
            4 => Cell::Chair,
            5 | 6 => Cell::Empty,
            7 | 8 => Cell::Stove,
            _ => Cell::LeftChair,
        };
        let mut targets: Vec<(usize, (usize, usize))> = cells_of(world, surface)
            .into_iter()
            .filter(|&p| surface != Cell::Empty || (world.walkable(p, &state.objects) && p != state.pos))
            .map(|(x, y)| (x.abs_diff(state.pos.0) + y.abs_diff(state.pos.1) + rng.random_range(0..6), (x, y)))
            .collect();
        targets.sort();
        let mut placed = false;
        for (_, target) in targets.into_iter().take(4) {
            if let Some((moves, face)) = path_next_to(world, &state.objects, state.pos, target) {
                for d in moves {
                    state.apply(GridAction::Move(d))?;
                    actions.push(GridAction::Move(d));
                }
                state.apply(GridAction::Place(face))?;
                actions.push(GridAction::Place(face));
                placed = true;
                break;
            }
        }
        if !placed {
            // put it back where it came from
            let (moves, face) = path_next_to(world, &state.objects, state.pos, at)
                .ok_or_else(|| contract("object origin became unreachable"))?;
            for d in moves {
                state.apply(GridAction::Move(d))?;
                actions.push(GridAction::Move(d));
            }
            state.apply(GridAction::Place(face))?;
            actions.push(GridAction::Place(face));
        }
    }
    wander(&mut state, &mut actions, rng)?;
    Ok(Episode { start, actions })
}

fn render_episode(id: &str, outcome: &Outcome, steps: usize) -> String {
    let carried = if outcome.placements.is_empty() {
        "did not move any object".to_string()
    } else {
        outcome
            .placements
            .iter()
            .map(|(item, surface)| format!("put the {} on the {surface}", item.label()))
            .collect::<Vec<_>>()
            .join(", then ")
    };
    format!(
        "Episode {id}: {steps} actions; the agent {carried}. It bumped into furniture {} times and into walls {} times.",
        outcome.object_collisions, outcome.wall_collisions
    )
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridPool {
    pub pool: TrajectoryPool,
    /// Per-concept maximum raw count over the pool (1 where the maximum is 0).
    pub normalizer: Vec<f64>,
}

/// Seeded pool of scripted episodes with normalized count features.
pub fn build_pool_homegrid(world: &HomeGrid, n_episodes: usize, seed: u64) -> Result<GridPool> {
    if n_episodes == 0 {
        return Err(contract("pool needs at least one episode"));
    }
    let mut rng = seed::stream(seed, "homegrid-pool", 0);
    let episodes = (0..n_episodes).map(|_| scripted_episode(world, &mut rng)).collect::<Result<Vec<_>>>()?;
    let outcomes = episodes.iter().map(|e| simulate(world, e)).collect::<Result<Vec<_>>>()?;
    let raws: Vec<Vec<f64>> = outcomes.iter().map(Outcome::features).collect();
    let normalizer: Vec<f64> = (0..N_GRID_CONCEPTS)
        .map(|c| {
            let m = raws.iter().map(|r| r[c]).fold(0.0, f64::max);
            if m > 0.0 { m } else { 1.0 }
        })
        .collect();
    let trajectories = episodes
        .into_iter()
        .zip(outcomes.iter().zip(&raws))
        .enumerate()
        .map(|(i, (episode, (outcome, raw)))| {
            let id = format!("h{i:02}");
            let features = raw.iter().zip(&normalizer).map(|(r, n)| r / n).collect();
            let render = render_episode(&id, outcome, episode.actions.len());
            Trajectory::new(id, features, render, Some(Provenance::Grid { episode }))
        })
        .collect::<Result<Vec<_>>>()?;
    let generation = serde_json::json!({
        "env": "homegrid",
        "n_episodes": n_episodes,
        "seed": seed,
        "normalizer": normalizer,
    });
    let pool = TrajectoryPool::new(homegrid_catalog(), "homegrid", generation, trajectories)?;
    Ok(GridPool { pool, normalizer })
}

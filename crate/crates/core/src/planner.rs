//! Input generators: prioritized space-time planning and a seeded noisy rollout.
//!
//! All randomness comes from `ChaCha8Rng::seed_from_u64`, which is portable and
//! stable across platforms, so a `(seed, request)` pair always yields the same
//! schedule.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{Graph, Vertex};
use crate::grid::GridMap;
use crate::schedule::{AgentRecord, Schedule, ScheduleError};

/// Name of the generator recorded alongside generated instances.
pub const RNG_NAME: &str = "ChaCha8Rng/seed_from_u64";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("invalid plan request: {0}")]
    InvalidRequest(String),
    #[error("no path for agent {agent} (`{name}`) within horizon {horizon}")]
    NoPath {
        agent: usize,
        name: String,
        horizon: usize,
    },
    #[error("cannot place {wanted} agents in a component of {available} vertices")]
    NotEnoughRoom { wanted: usize, available: usize },
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanRequest {
    pub starts: Vec<Vertex>,
    pub goals: Vec<Vertex>,
    pub horizon_cap: usize,
    pub seed: u64,
    /// Probability of a random action per step, in `[0, 1]`.
    pub noise: f64,
}

impl PlanRequest {
    fn check(&self, g: &Graph) -> Result<(), PlanError> {
        let bad = |msg: String| Err(PlanError::InvalidRequest(msg));
        if self.starts.len() != self.goals.len() {
            return bad(format!(
                "{} starts but {} goals",
                self.starts.len(),
                self.goals.len()
            ));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return bad(format!("noise {} outside [0, 1]", self.noise));
        }
        for (what, list) in [("start", &self.starts), ("goal", &self.goals)] {
            let mut seen = HashSet::new();
            for &v in list {
                if !g.contains(v) {
                    return bad(format!("{what} vertex {} is not in the graph", v.0));
                }
                if !seen.insert(v) {
                    return bad(format!("duplicate {what} `{}`", g.name(v)));
                }
            }
        }
        Ok(())
    }
}

fn agent_name(i: usize) -> String {
    format!("agent{i}")
}

#[derive(Default)]
struct Reservations {
    vertex: HashSet<(usize, Vertex)>,
    edge: HashSet<(usize, Vertex, Vertex)>,
    /// Vertex -> time from which it is held forever.
    parked: HashMap<Vertex, usize>,
    last_visit: HashMap<Vertex, usize>,
}

impl Reservations {
    fn free(&self, v: Vertex, t: usize) -> bool {
        !self.vertex.contains(&(t, v)) && self.parked.get(&v).is_none_or(|&from| t < from)
    }

    fn can_move(&self, u: Vertex, v: Vertex, t: usize) -> bool {
        u == v || !self.edge.contains(&(t, v, u))
    }

    fn reserve(&mut self, path: &[Vertex]) {
        for (t, &v) in path.iter().enumerate() {
            self.vertex.insert((t, v));
            let last = self.last_visit.entry(v).or_default();
            *last = (*last).max(t);
            if t + 1 < path.len() && path[t + 1] != v {
                self.edge.insert((t, v, path[t + 1]));
            }
        }
        if let Some(&goal) = path.last() {
            self.parked.insert(goal, path.len() - 1);
        }
    }
}

/// Space-time A* for one agent. Ties prefer deeper nodes, then earlier pushes,
/// and neighbours are pushed in ascending vertex order, so an unobstructed
/// agent follows the lowest-index shortest route.
fn space_time_search(
    g: &Graph,
    start: Vertex,
    goal: Vertex,
    cap: usize,
    res: &Reservations,
) -> Option<Vec<Vertex>> {
    let h = g.bfs_distances(goal);
    let h0 = h[start.index()]? as usize;
    if !res.free(start, 0) {
        return None;
    }
    // The goal must stay free from arrival onwards.
    let settle_after = res.last_visit.get(&goal).copied();
    let width = cap + 1;
    let mut parent: HashMap<(Vertex, usize), Vertex> = HashMap::new();
    let mut closed = vec![false; g.len() * width];
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    heap.push(Reverse((h0, Reverse(0usize), seq, start)));
    while let Some(Reverse((_, Reverse(t), _, v))) = heap.pop() {
        let slot = v.index() * width + t;
        if closed[slot] {
            continue;
        }
        closed[slot] = true;
        if v == goal && settle_after.is_none_or(|last| t > last) {
            let mut path = vec![v];
            let mut cur = (v, t);
            while let Some(&p) = parent.get(&cur) {
                path.push(p);
                cur = (p, cur.1 - 1);
            }
            path.reverse();
            return Some(path);
        }
        if t == cap {
            continue;
        }
        for &w in g.neighbors(v).iter().chain(std::iter::once(&v)) {
            let Some(hw) = h[w.index()] else { continue };
            let nt = t + 1;
            if closed[w.index() * width + nt] || !res.free(w, nt) || !res.can_move(v, w, t) {
                continue;
            }
            if nt + hw as usize > cap {
                continue;
            }
            parent.entry((w, nt)).or_insert(v);
            seq += 1;
            heap.push(Reverse((nt + hw as usize, Reverse(nt), seq, w)));
        }
    }
    None
}

/// Plans agents one by one against the reservations of earlier agents; every
/// finished agent holds its goal for the rest of time. Paths are padded to a
/// common horizon with goal waits.
pub fn prioritized_plan(g: &Graph, req: &PlanRequest) -> Result<Schedule, PlanError> {
    req.check(g)?;
    let mut res = Reservations::default();
    let mut paths = Vec::with_capacity(req.starts.len());
    for (i, (&s, &goal)) in req.starts.iter().zip(&req.goals).enumerate() {
        let path = space_time_search(g, s, goal, req.horizon_cap, &res).ok_or_else(|| {
            PlanError::NoPath {
                agent: i,
                name: agent_name(i),
                horizon: req.horizon_cap,
            }
        })?;
        res.reserve(&path);
        paths.push(path);
    }
    let horizon = paths.iter().map(|p| p.len() - 1).max().unwrap_or(0);
    let agents = paths
        .into_iter()
        .enumerate()
        .map(|(i, mut path)| {
            let goal = req.goals[i];
            path.resize(horizon + 1, goal);
            AgentRecord::new(agent_name(i), req.starts[i], goal, path)
        })
        .collect();
    Ok(Schedule::new(horizon, agents)?)
}

/// Step-by-step rollout of a noisy greedy policy.
///
/// Each step, agents in index order pick a successor. An agent at its goal
/// waits. Otherwise, with probability `1 - noise` it takes the first step of
/// the lowest-index shortest route (or waits if that cell is taken), and with
/// probability `noise` it picks uniformly among its feasible moves and the wait.
/// A move is feasible if no earlier agent claimed the target, no later agent is
/// still standing on it, and it does not swap with an earlier agent. The rollout
/// stops once everyone is home or at the horizon cap. Agents can deadlock; the
/// result is feasible in relaxed mode.
pub fn noisy_rollout(g: &Graph, req: &PlanRequest) -> Result<Schedule, PlanError> {
    req.check(g)?;
    let n = req.starts.len();
    let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
    let dist: Vec<Vec<Option<u32>>> = req
        .goals
        .iter()
        .map(|&goal| g.bfs_distances(goal))
        .collect();
    let mut paths: Vec<Vec<Vertex>> = req.starts.iter().map(|&s| vec![s]).collect();
    let mut pos = req.starts.clone();

    let mut standing: HashMap<Vertex, usize> = HashMap::new();
    let mut claimed: HashSet<Vertex> = HashSet::new();
    let mut moved: HashSet<(Vertex, Vertex)> = HashSet::new();
    let mut options: Vec<Vertex> = Vec::new();
    for _ in 0..req.horizon_cap {
        if pos.iter().zip(&req.goals).all(|(p, goal)| p == goal) {
            break;
        }
        standing.clear();
        standing.extend(pos.iter().enumerate().map(|(i, &v)| (v, i)));
        claimed.clear();
        moved.clear();
        for i in 0..n {
            let u = pos[i];
            let feasible = |v: Vertex| {
                v == u
                    || (!claimed.contains(&v)
                        && standing.get(&v).is_none_or(|&j| j < i)
                        && !moved.contains(&(v, u)))
            };
            let next = if u == req.goals[i] {
                u
            } else if rng.gen::<f64>() < req.noise {
                options.clear();
                options.push(u);
                options.extend(g.neighbors(u).iter().copied().filter(|&v| feasible(v)));
                options[rng.gen_range(0..options.len())]
            } else {
                let d = &dist[i];
                let step = d[u.index()].and_then(|du| {
                    g.neighbors(u)
                        .iter()
                        .copied()
                        .find(|w| d[w.index()].is_some_and(|dw| dw + 1 == du))
                });
                step.filter(|&w| feasible(w)).unwrap_or(u)
            };
            claimed.insert(next);
            if next != u {
                moved.insert((u, next));
            }
            pos[i] = next;
        }
        for (path, &v) in paths.iter_mut().zip(&pos) {
            path.push(v);
        }
    }
    let horizon = paths.first().map_or(0, |p| p.len() - 1);
    let agents = paths
        .into_iter()
        .enumerate()
        .map(|(i, path)| AgentRecord::new(agent_name(i), req.starts[i], req.goals[i], path))
        .collect();
    Ok(Schedule::new(horizon, agents)?)
}

/// Obstacles placed independently with probability `obstacle_ratio`.
pub fn random_grid(height: usize, width: usize, obstacle_ratio: f64, seed: u64) -> GridMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut map = GridMap::new(height, width);
    for r in 0..height {
        for c in 0..width {
            if rng.gen::<f64>() < obstacle_ratio {
                map.blocked.insert((r, c));
            }
        }
    }
    map
}

fn largest_component(g: &Graph) -> Vec<Vertex> {
    let mut seen = vec![false; g.len()];
    let mut best: Vec<Vertex> = Vec::new();
    for root in g.vertices() {
        if seen[root.index()] {
            continue;
        }
        seen[root.index()] = true;
        let mut comp = vec![root];
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &w in g.neighbors(u) {
                if !seen[w.index()] {
                    seen[w.index()] = true;
                    comp.push(w);
                    queue.push_back(w);
                }
            }
        }
        if comp.len() > best.len() {
            best = comp;
        }
    }
    best.sort_unstable();
    best
}

/// Distinct random starts and distinct random goals inside the largest connected component.
pub fn sample_endpoints(
    g: &Graph,
    n: usize,
    seed: u64,
) -> Result<(Vec<Vertex>, Vec<Vertex>), PlanError> {
    let pool = largest_component(g);
    if n > pool.len() {
        return Err(PlanError::NotEnoughRoom {
            wanted: n,
            available: pool.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts = pool.choose_multiple(&mut rng, n).copied().collect();
    let goals = pool.choose_multiple(&mut rng, n).copied().collect();
    Ok((starts, goals))
}

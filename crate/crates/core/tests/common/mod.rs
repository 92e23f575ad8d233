#![allow(dead_code)]

use mapf_collapse::candidates::{generate_candidates, CandidateMode, CandidateSet};
use mapf_collapse::relations::RelationSet;
use mapf_collapse::{validate, AgentRecord, Graph, Schedule, ValidationMode, Vertex, VertexId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Connected graph on `n` vertices `v0..`: a random tree plus extra edges with probability `extra`.
pub fn random_graph(rng: &mut impl Rng, n: usize, extra: f64) -> Graph {
    let names: Vec<VertexId> = (0..n)
        .map(|i| VertexId::new(format!("v{i}")).unwrap())
        .collect();
    let mut edges = Vec::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        edges.push((names[j].clone(), names[i].clone()));
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(extra) {
                edges.push((names[i].clone(), names[j].clone()));
            }
        }
    }
    Graph::new(names, edges).unwrap()
}

/// Collision-free random walks. Each agent steps back to its previous vertex with
/// probability `back`, otherwise tries its neighbours in random order and waits
/// when none is free (or, one time in five, at a random point of that order).
/// Later agents' current vertices are avoided, so waiting is always possible.
pub fn random_walks(
    rng: &mut impl Rng,
    g: &Graph,
    agents: usize,
    horizon: usize,
    back: f64,
) -> Option<Vec<Vec<Vertex>>> {
    let mut all: Vec<Vertex> = g.vertices().collect();
    if all.len() < agents {
        return None;
    }
    all.shuffle(rng);
    let mut paths: Vec<Vec<Vertex>> = all[..agents].iter().map(|&v| vec![v]).collect();
    for t in 0..horizon {
        for i in 0..agents {
            let here = paths[i][t];
            let mut options: Vec<Vertex> = g.neighbors(here).to_vec();
            options.shuffle(rng);
            let wait_at = if rng.gen_bool(0.2) {
                rng.gen_range(0..=options.len())
            } else {
                options.len()
            };
            options.insert(wait_at, here);
            if t > 0 && paths[i][t - 1] != here && rng.gen_bool(back) {
                options.insert(0, paths[i][t - 1]);
            }
            let free = |w: Vertex| {
                (0..i)
                    .all(|j| paths[j][t + 1] != w && !(paths[j][t] == w && paths[j][t + 1] == here))
                    && (i + 1..agents).all(|j| paths[j][t] != w)
            };
            let next = options.into_iter().find(|&w| free(w))?;
            paths[i].push(next);
        }
    }
    Some(paths)
}

/// A strict-mode schedule (goal = final vertex) with at most `cap` exhaustive candidates.
pub fn small_instance(seed: u64, cap: usize) -> (Graph, Schedule) {
    let mut r = rng(seed);
    loop {
        let n = if r.gen_bool(0.6) {
            r.gen_range(3..=5)
        } else {
            r.gen_range(3..=9)
        };
        let g = random_graph(&mut r, n, 0.25);
        let agents = r.gen_range(2..=4.min(n - 1));
        let horizon = r.gen_range(2..=8);
        let Some(paths) = random_walks(&mut r, &g, agents, horizon, 0.3) else {
            continue;
        };
        let s = Schedule::from_paths(paths).unwrap();
        if generate_candidates(&s, CandidateMode::Exhaustive).len() > cap {
            continue;
        }
        if validate(&s, &g, ValidationMode::Strict).unwrap().feasible {
            return (g, s);
        }
    }
}

/// Same paths with goals drawn at random, valid only in relaxed mode.
pub fn with_random_goals(rng: &mut impl Rng, g: &Graph, s: &Schedule) -> Schedule {
    let mut pool: Vec<Vertex> = g.vertices().collect();
    pool.shuffle(rng);
    let agents = s
        .agents()
        .iter()
        .zip(pool)
        .map(|(a, goal)| AgentRecord::new(a.name.clone(), a.start, goal, a.path.clone()))
        .collect();
    Schedule::new(s.horizon(), agents).unwrap()
}

/// Checks a selection against the relation set directly, without the ILP model.
pub fn relation_feasible(rel: &RelationSet, set: &CandidateSet, selected: &[usize]) -> bool {
    let on = |i: usize| selected.contains(&i);
    if selected.iter().any(|i| rel.invalid.contains(i)) {
        return false;
    }
    for w in selected.iter().enumerate() {
        for &j in &selected[w.0 + 1..] {
            let (a, b) = (set.get(*w.1), set.get(j));
            if a.agent == b.agent && a.overlaps(b) {
                return false;
            }
        }
    }
    let pair_ok = |&(a, b): &(usize, usize)| !(on(a) && on(b));
    rel.exclusions_in.iter().all(pair_ok)
        && rel.exclusions_cross.iter().all(pair_ok)
        && rel
            .dependencies
            .iter()
            .all(|d| !on(d.action) || d.suitable.iter().any(|&k| on(k)))
}

/// Every subset of `0..n` as a sorted index list.
pub fn subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0u64..1 << n).map(move |mask| (0..n).filter(|&i| mask >> i & 1 == 1).collect())
}

pub fn apply(s: &Schedule, set: &CandidateSet, selected: &[usize]) -> Schedule {
    let mut paths: Vec<Vec<Vertex>> = s.paths().map(<[Vertex]>::to_vec).collect();
    for &i in selected {
        let c = set.get(i);
        paths[c.agent][c.start..=c.end].fill(c.vertex);
    }
    let agents = s
        .agents()
        .iter()
        .zip(paths)
        .map(|(a, p)| AgentRecord::new(a.name.clone(), a.start, a.goal, p))
        .collect();
    Schedule::new(s.horizon(), agents).unwrap()
}

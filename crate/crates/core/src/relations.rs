//! Constraint relations between collapse actions.
//!
//! Three families are derived from the input schedule:
//! - at most one of two same-agent actions whose intervals intersect,
//! - at most one of two cross-agent actions on the same vertex with intersecting intervals,
//! - a dependency `y_c <= sum(S)` whenever action `c` would park its agent on a
//!   vertex another agent `j` visits at time `k`; `S` holds the actions of `j`
//!   covering `k` that park `j` elsewhere. An empty `S` makes `c` invalid.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidates::CandidateSet;
use crate::graph::Vertex;
use crate::interval::IntervalIndex;
use crate::schedule::Schedule;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RelationError {
    #[error("action {index} refers to agent {agent}, schedule has {agents} agents")]
    UnknownAgent {
        index: usize,
        agent: usize,
        agents: usize,
    },
    #[error("action {index} spans [{start}, {end}] beyond horizon {horizon}")]
    BeyondHorizon {
        index: usize,
        start: usize,
        end: usize,
        horizon: usize,
    },
    #[error("action {index} is not a closed subwalk of agent {agent}")]
    NotClosed { index: usize, agent: usize },
}

/// Per timestep, which agents stand on which vertex.
#[derive(Debug, Clone)]
pub struct OccupancyIndex {
    slots: Vec<HashMap<Vertex, Vec<usize>>>,
}

impl OccupancyIndex {
    pub fn build(s: &Schedule) -> Self {
        let mut slots = vec![HashMap::<Vertex, Vec<usize>>::new(); s.horizon() + 1];
        for (agent, path) in s.paths().enumerate() {
            for (t, &v) in path.iter().enumerate() {
                slots[t].entry(v).or_default().push(agent);
            }
        }
        Self { slots }
    }

    pub fn occupants(&self, t: usize, v: Vertex) -> &[usize] {
        self.slots
            .get(t)
            .and_then(|m| m.get(&v))
            .map_or(&[], Vec::as_slice)
    }
}

/// One stabbing index per agent over that agent's candidate intervals.
#[derive(Debug, Clone)]
pub struct AgentIntervals {
    per_agent: Vec<IntervalIndex>,
}

impl AgentIntervals {
    pub fn build(horizon: usize, candidates: &CandidateSet) -> Self {
        let per_agent = (0..candidates.n_agents())
            .map(|agent| {
                IntervalIndex::build(
                    horizon,
                    candidates.agent_range(agent).map(|i| {
                        let c = candidates.get(i);
                        (c.start, c.end, i)
                    }),
                )
            })
            .collect();
        Self { per_agent }
    }

    /// Canonical indices of `agent`'s actions with `start <= k <= end`.
    pub fn query(&self, agent: usize, k: usize) -> Vec<usize> {
        self.per_agent
            .get(agent)
            .map(|idx| idx.query(k))
            .unwrap_or_default()
    }
}

pub fn interval_query(index: &AgentIntervals, agent: usize, k: usize) -> Vec<usize> {
    index.query(agent, k)
}

/// `y_action <= sum of y over suitable`, recorded for the first blocking
/// `(agent, timestep)` that produced this exact suitable set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dependency {
    pub action: usize,
    pub agent: usize,
    pub timestep: usize,
    pub suitable: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RelationSet {
    pub exclusions_in: Vec<(usize, usize)>,
    pub exclusions_cross: Vec<(usize, usize)>,
    pub dependencies: Vec<Dependency>,
    pub invalid: Vec<usize>,
}

impl RelationSet {
    pub fn to_dump(&self) -> RelationsDump {
        RelationsDump {
            mutex_in: self.exclusions_in.iter().map(|&(a, b)| [a, b]).collect(),
            mutex_cross: self.exclusions_cross.iter().map(|&(a, b)| [a, b]).collect(),
            deps: self
                .dependencies
                .iter()
                .map(|d| DependencyDump {
                    c: d.action,
                    suitable: d.suitable.clone(),
                })
                .collect(),
            invalid: self.invalid.clone(),
        }
    }
}

/// Debug form keyed by canonical action indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationsDump {
    pub mutex_in: Vec<[usize; 2]>,
    pub mutex_cross: Vec<[usize; 2]>,
    pub deps: Vec<DependencyDump>,
    pub invalid: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyDump {
    pub c: usize,
    #[serde(rename = "S")]
    pub suitable: Vec<usize>,
}

fn check_consistency(s: &Schedule, candidates: &CandidateSet) -> Result<(), RelationError> {
    for (index, c) in candidates.actions().iter().enumerate() {
        if c.agent >= s.len() {
            return Err(RelationError::UnknownAgent {
                index,
                agent: c.agent,
                agents: s.len(),
            });
        }
        if c.start >= c.end || c.end > s.horizon() {
            return Err(RelationError::BeyondHorizon {
                index,
                start: c.start,
                end: c.end,
                horizon: s.horizon(),
            });
        }
        if s.at(c.agent, c.start) != c.vertex || s.at(c.agent, c.end) != c.vertex {
            return Err(RelationError::NotClosed {
                index,
                agent: c.agent,
            });
        }
    }
    Ok(())
}

/// Sweep over actions sorted by start: every later action starting no later
/// than the current end intersects it.
fn overlapping_pairs(
    candidates: &CandidateSet,
    mut group: Vec<usize>,
    keep: impl Fn(usize, usize) -> bool,
    out: &mut Vec<(usize, usize)>,
) {
    group.sort_unstable_by_key(|&i| (candidates.get(i).start, i));
    for (p, &i) in group.iter().enumerate() {
        let end = candidates.get(i).end;
        for &j in &group[p + 1..] {
            if candidates.get(j).start > end {
                break;
            }
            if keep(i, j) {
                out.push((i.min(j), i.max(j)));
            }
        }
    }
}

pub fn build_relations(
    s: &Schedule,
    candidates: &CandidateSet,
) -> Result<RelationSet, RelationError> {
    check_consistency(s, candidates)?;

    let mut exclusions_in = Vec::new();
    for agent in 0..candidates.n_agents() {
        overlapping_pairs(
            candidates,
            candidates.agent_range(agent).collect(),
            |_, _| true,
            &mut exclusions_in,
        );
    }

    let mut by_vertex: HashMap<Vertex, Vec<usize>> = HashMap::new();
    for (i, c) in candidates.actions().iter().enumerate() {
        by_vertex.entry(c.vertex).or_default().push(i);
    }
    let mut exclusions_cross = Vec::new();
    for (_, group) in by_vertex {
        overlapping_pairs(
            candidates,
            group,
            |i, j| candidates.get(i).agent != candidates.get(j).agent,
            &mut exclusions_cross,
        );
    }

    let occupancy = OccupancyIndex::build(s);
    let intervals = AgentIntervals::build(s.horizon(), candidates);
    let mut dependencies = Vec::new();
    let mut invalid = Vec::new();
    let mut own: Vec<Dependency> = Vec::new();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    for (ci, c) in candidates.actions().iter().enumerate() {
        own.clear();
        seen.clear();
        let mut is_invalid = false;
        'scan: for k in c.start..=c.end {
            for &j in occupancy.occupants(k, c.vertex) {
                if j == c.agent {
                    continue;
                }
                let suitable: Vec<usize> = intervals
                    .query(j, k)
                    .into_iter()
                    .filter(|&i| candidates.get(i).vertex != c.vertex)
                    .collect();
                if suitable.is_empty() {
                    is_invalid = true;
                    break 'scan;
                }
                if seen.insert(suitable.clone()) {
                    own.push(Dependency {
                        action: ci,
                        agent: j,
                        timestep: k,
                        suitable,
                    });
                }
            }
        }
        if is_invalid {
            invalid.push(ci);
        } else {
            dependencies.append(&mut own);
        }
    }

    exclusions_in.sort_unstable();
    exclusions_cross.sort_unstable();
    dependencies.sort();
    Ok(RelationSet {
        exclusions_in,
        exclusions_cross,
        dependencies,
        invalid,
    })
}

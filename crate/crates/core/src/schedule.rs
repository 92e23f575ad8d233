//! Schedules and the polynomial feasibility check.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, Vertex};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("agent `{agent}` has {len} positions, expected {expected} (horizon {horizon})")]
    PathLength {
        agent: String,
        len: usize,
        expected: usize,
        horizon: usize,
    },
    #[error("agent `{agent}` references vertex handle {vertex} not in the graph")]
    UnknownVertex { agent: String, vertex: u32 },
}

/// Strict mode enforces goal arrival and distinct goals; relaxed mode accepts
/// partially solved schedules where some agents never reach their goals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValidationMode {
    #[default]
    Strict,
    Relaxed,
}

impl fmt::Display for ValidationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Strict => "strict",
            Self::Relaxed => "relaxed",
        })
    }
}

impl FromStr for ValidationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(Self::Strict),
            "relaxed" => Ok(Self::Relaxed),
            other => Err(format!(
                "unknown validation mode `{other}` (expected strict|relaxed)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentRecord {
    pub name: String,
    pub start: Vertex,
    pub goal: Vertex,
    pub path: Vec<Vertex>,
}

impl AgentRecord {
    pub fn new(name: impl Into<String>, start: Vertex, goal: Vertex, path: Vec<Vertex>) -> Self {
        Self {
            name: name.into(),
            start,
            goal,
            path,
        }
    }

    /// Number of non-wait steps.
    pub fn moves(&self) -> usize {
        self.path.windows(2).filter(|w| w[0] != w[1]).count()
    }

    /// Arrival time: the first timestep from which the agent stays at its goal
    /// until the horizon, or the horizon itself if it never settles there.
    pub fn arrival_time(&self) -> usize {
        let horizon = self.path.len().saturating_sub(1);
        if self.path.last() != Some(&self.goal) {
            return horizon;
        }
        let settled = self
            .path
            .iter()
            .rev()
            .take_while(|&&v| v == self.goal)
            .count();
        self.path.len() - settled
    }

    pub fn rests_at_goal(&self) -> bool {
        self.path.last() == Some(&self.goal)
    }
}

/// An N x (T+1) matrix of positions plus per-agent start and goal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    horizon: usize,
    agents: Vec<AgentRecord>,
}

impl Schedule {
    pub fn new(horizon: usize, agents: Vec<AgentRecord>) -> Result<Self, ScheduleError> {
        for a in &agents {
            if a.path.len() != horizon + 1 {
                return Err(ScheduleError::PathLength {
                    agent: a.name.clone(),
                    len: a.path.len(),
                    expected: horizon + 1,
                    horizon,
                });
            }
        }
        Ok(Self { horizon, agents })
    }

    /// Builds a schedule from paths alone, with start = first and goal = last position.
    pub fn from_paths(paths: Vec<Vec<Vertex>>) -> Result<Self, ScheduleError> {
        let horizon = paths.first().map_or(0, |p| p.len().saturating_sub(1));
        let agents = paths
            .into_iter()
            .enumerate()
            .map(|(i, path)| {
                let start = path.first().copied().unwrap_or(Vertex(0));
                let goal = path.last().copied().unwrap_or(Vertex(0));
                AgentRecord::new(format!("agent{i}"), start, goal, path)
            })
            .collect();
        Self::new(horizon, agents)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn agents(&self) -> &[AgentRecord] {
        &self.agents
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn agent(&self, i: usize) -> &AgentRecord {
        &self.agents[i]
    }

    #[inline]
    pub fn at(&self, agent: usize, t: usize) -> Vertex {
        self.agents[agent].path[t]
    }

    pub fn path(&self, agent: usize) -> &[Vertex] {
        &self.agents[agent].path
    }

    /// Mutable access to one agent's path; the length must not change.
    pub(crate) fn path_mut(&mut self, agent: usize) -> &mut [Vertex] {
        &mut self.agents[agent].path
    }

    pub fn paths(&self) -> impl Iterator<Item = &[Vertex]> {
        self.agents.iter().map(|a| a.path.as_slice())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    StartMismatch,
    GoalStop,
    DisconnectedStep,
    VertexCollision,
    EdgeCollision,
    DuplicateStart,
    DuplicateGoal,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok();
        f.write_str(s.as_ref().and_then(|v| v.as_str()).unwrap_or("?"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub timestep: usize,
    pub kind: ViolationKind,
    pub agents: Vec<usize>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} at t={} involving agents {:?}",
            self.kind, self.timestep, self.agents
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    fn from_violations(mut violations: Vec<Violation>) -> Self {
        violations.sort();
        Self {
            feasible: violations.is_empty(),
            violations,
        }
    }

    pub fn first(&self) -> Option<&Violation> {
        self.violations.first()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

/// Checks every feasibility constraint and reports all violations.
///
/// Runs in O(N*T) expected time plus the adjacency lookups.
pub fn validate(
    s: &Schedule,
    g: &Graph,
    mode: ValidationMode,
) -> Result<FeasibilityReport, ScheduleError> {
    for a in s.agents() {
        for &v in a.path.iter().chain([&a.start, &a.goal]) {
            if !g.contains(v) {
                return Err(ScheduleError::UnknownVertex {
                    agent: a.name.clone(),
                    vertex: v.0,
                });
            }
        }
    }

    let mut out = Vec::new();
    let horizon = s.horizon();

    for (i, a) in s.agents().iter().enumerate() {
        if a.path[0] != a.start {
            out.push(Violation {
                timestep: 0,
                kind: ViolationKind::StartMismatch,
                agents: vec![i],
            });
        }
        if mode == ValidationMode::Strict && a.path[horizon] != a.goal {
            out.push(Violation {
                timestep: horizon,
                kind: ViolationKind::GoalStop,
                agents: vec![i],
            });
        }
        for (t, w) in a.path.windows(2).enumerate() {
            if !g.adjacent(w[0], w[1]) {
                out.push(Violation {
                    timestep: t,
                    kind: ViolationKind::DisconnectedStep,
                    agents: vec![i],
                });
            }
        }
    }

    duplicates(
        s.agents().iter().map(|a| a.start),
        ViolationKind::DuplicateStart,
        &mut out,
    );
    if mode == ValidationMode::Strict {
        duplicates(
            s.agents().iter().map(|a| a.goal),
            ViolationKind::DuplicateGoal,
            &mut out,
        );
    }

    // Occupancy stamps: stamp[v] == t + 1 means `owner[v]` is at v at time t.
    let mut stamp = vec![0usize; g.len()];
    let mut owner = vec![0usize; g.len()];
    let mut moves: HashMap<(Vertex, Vertex), usize> = HashMap::new();
    for t in 0..=horizon {
        for (i, p) in s.paths().enumerate() {
            let v = p[t];
            if stamp[v.index()] == t + 1 {
                out.push(Violation {
                    timestep: t,
                    kind: ViolationKind::VertexCollision,
                    agents: vec![owner[v.index()], i],
                });
            } else {
                stamp[v.index()] = t + 1;
                owner[v.index()] = i;
            }
        }
        if t == horizon {
            break;
        }
        moves.clear();
        for (i, p) in s.paths().enumerate() {
            let (u, v) = (p[t], p[t + 1]);
            if u == v {
                continue;
            }
            if let Some(&j) = moves.get(&(v, u)) {
                out.push(Violation {
                    timestep: t,
                    kind: ViolationKind::EdgeCollision,
                    agents: vec![j, i],
                });
            }
            moves.insert((u, v), i);
        }
    }

    Ok(FeasibilityReport::from_violations(out))
}

fn duplicates(
    vertices: impl Iterator<Item = Vertex>,
    kind: ViolationKind,
    out: &mut Vec<Violation>,
) {
    let mut first: HashMap<Vertex, usize> = HashMap::new();
    for (i, v) in vertices.enumerate() {
        match first.get(&v) {
            Some(&j) => out.push(Violation {
                timestep: 0,
                kind,
                agents: vec![j, i],
            }),
            None => {
                first.insert(v, i);
            }
        }
    }
}

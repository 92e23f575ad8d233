//! Collapse candidates: closed subwalks of one agent that may be replaced by waiting.

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::graph::Vertex;
use crate::schedule::Schedule;

pub const DEFAULT_ABA_PASSES: usize = 16;

/// Rewrite agent `agent` to wait at `vertex` on every timestep in `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CollapseAction {
    pub agent: usize,
    pub start: usize,
    pub end: usize,
    pub vertex: Vertex,
    /// Moves removed by the collapse.
    pub weight: u32,
}

impl CollapseAction {
    /// Inclusive interval intersection; touching endpoints count.
    #[inline]
    pub fn overlaps(&self, other: &CollapseAction) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    #[inline]
    pub fn covers(&self, t: usize) -> bool {
        self.start <= t && t <= self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CandidateMode {
    /// Endpoints restricted to the first and last timestep of each constant run,
    /// zero-weight actions dropped.
    #[default]
    Reduced,
    /// Every pair of equal positions.
    Exhaustive,
}

impl fmt::Display for CandidateMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Reduced => "reduced",
            Self::Exhaustive => "exhaustive",
        })
    }
}

impl FromStr for CandidateMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reduced" => Ok(Self::Reduced),
            "exhaustive" => Ok(Self::Exhaustive),
            other => Err(format!(
                "unknown candidate mode `{other}` (expected reduced|exhaustive)"
            )),
        }
    }
}

/// Candidate actions sorted by `(agent, start, end)`; the position in `actions`
/// is the canonical action index used by relations and the ILP.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    actions: Vec<CollapseAction>,
    per_agent: Vec<Range<usize>>,
    mode: CandidateMode,
}

impl CandidateSet {
    /// Canonicalizes an arbitrary list of actions over `n_agents` agents.
    pub fn from_actions(
        mut actions: Vec<CollapseAction>,
        n_agents: usize,
        mode: CandidateMode,
    ) -> Self {
        actions.sort_unstable_by_key(|c| (c.agent, c.start, c.end, c.vertex));
        actions.dedup();
        let mut per_agent = Vec::with_capacity(n_agents);
        let mut cursor = 0;
        for agent in 0..n_agents {
            let begin = cursor;
            while cursor < actions.len() && actions[cursor].agent == agent {
                cursor += 1;
            }
            per_agent.push(begin..cursor);
        }
        Self {
            actions,
            per_agent,
            mode,
        }
    }

    pub fn actions(&self) -> &[CollapseAction] {
        &self.actions
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn get(&self, index: usize) -> &CollapseAction {
        &self.actions[index]
    }

    pub fn mode(&self) -> CandidateMode {
        self.mode
    }

    pub fn n_agents(&self) -> usize {
        self.per_agent.len()
    }

    /// Canonical indices of one agent's actions.
    pub fn agent_range(&self, agent: usize) -> Range<usize> {
        self.per_agent.get(agent).cloned().unwrap_or(0..0)
    }
}

/// Prefix move counts: `pref[t]` is the number of moves in `path[0..=t]`.
pub(crate) fn prefix_moves(path: &[Vertex]) -> Vec<u32> {
    let mut pref = Vec::with_capacity(path.len());
    pref.push(0);
    for w in path.windows(2) {
        let last = *pref.last().unwrap_or(&0);
        pref.push(last + u32::from(w[0] != w[1]));
    }
    pref
}

pub fn generate_candidates(s: &Schedule, mode: CandidateMode) -> CandidateSet {
    let mut actions = Vec::new();
    for (agent, path) in s.paths().enumerate() {
        let pref = prefix_moves(path);
        let mut times: HashMap<Vertex, Vec<usize>> = HashMap::new();
        for (t, &v) in path.iter().enumerate() {
            let keep = match mode {
                CandidateMode::Exhaustive => true,
                // First or last timestep of a maximal constant run.
                CandidateMode::Reduced => {
                    (t == 0 || path[t - 1] != v) || (t + 1 == path.len() || path[t + 1] != v)
                }
            };
            if keep {
                times.entry(v).or_default().push(t);
            }
        }
        for (vertex, ts) in times {
            for (i, &start) in ts.iter().enumerate() {
                for &end in &ts[i + 1..] {
                    let weight = pref[end] - pref[start];
                    if mode == CandidateMode::Reduced && weight == 0 {
                        continue;
                    }
                    actions.push(CollapseAction {
                        agent,
                        start,
                        end,
                        vertex,
                        weight,
                    });
                }
            }
        }
    }
    CandidateSet::from_actions(actions, s.len(), mode)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbaOutcome {
    pub schedule: Schedule,
    /// Moves removed by the rewrites.
    pub removed: usize,
    /// Full passes executed, including the final pass that found nothing.
    pub passes: usize,
    pub fixpoint: bool,
}

/// Rewrites `A B A` into `A A A` wherever no other agent occupies `A` at the
/// middle timestep. Agents are scanned in index order, timesteps ascending, and
/// full passes repeat until nothing changes or `max_passes` is reached.
///
/// Only vertex occupancy needs checking: the rewrite turns two moves into waits
/// and introduces no new move.
pub fn aba_prefilter(s: &Schedule, max_passes: usize) -> AbaOutcome {
    let mut out = s.clone();
    let mut occupancy: HashMap<(usize, Vertex), u32> = HashMap::new();
    for path in s.paths() {
        for (t, &v) in path.iter().enumerate() {
            *occupancy.entry((t, v)).or_default() += 1;
        }
    }

    let mut removed = 0;
    let mut passes = 0;
    let mut fixpoint = false;
    while passes < max_passes {
        passes += 1;
        let mut changed = false;
        for agent in 0..out.len() {
            let path = out.path_mut(agent);
            for t in 1..path.len().saturating_sub(1) {
                let (a, b) = (path[t - 1], path[t]);
                if a == b || path[t + 1] != a {
                    continue;
                }
                if occupancy.get(&(t, a)).copied().unwrap_or(0) > 0 {
                    continue;
                }
                path[t] = a;
                if let Some(n) = occupancy.get_mut(&(t, b)) {
                    *n -= 1;
                }
                *occupancy.entry((t, a)).or_default() += 1;
                removed += 2;
                changed = true;
            }
        }
        if !changed {
            fixpoint = true;
            break;
        }
    }
    AbaOutcome {
        schedule: out,
        removed,
        passes,
        fixpoint,
    }
}

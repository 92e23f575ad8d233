//! Brute-force ground truth for small instances.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidates::{generate_candidates, CandidateMode, CandidateSet};
use crate::graph::Graph;
use crate::metrics::cost_moves;
use crate::schedule::{validate, Schedule, ScheduleError, ValidationMode};

pub const DEFAULT_CANDIDATE_CAP: usize = 20;
pub const MIS_VERTEX_CAP: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("{found} exhaustive candidates exceed the oracle cap of {cap}")]
    TooManyCandidates { found: usize, cap: usize },
    #[error("graph has {found} vertices, independent set enumeration is capped at {cap}")]
    TooManyVertices { found: usize, cap: usize },
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleResult {
    pub best_saving: u64,
    /// Canonical indices into the exhaustive candidate set.
    pub best_selection: Vec<usize>,
    /// Selections whose collapsed schedule passed validation.
    pub enumerated: u64,
}

/// Which same-agent pairs may be selected together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OverlapPolicy {
    /// Intervals must be disjoint.
    #[default]
    Disjoint,
    /// Intervals may additionally share one endpoint.
    AllowTouching,
}

struct Enumerator<'a> {
    s: &'a Schedule,
    g: &'a Graph,
    mode: ValidationMode,
    set: &'a CandidateSet,
    policy: OverlapPolicy,
    base_cost: usize,
    chosen: Vec<usize>,
    best: OracleResult,
}

impl Enumerator<'_> {
    fn compatible(&self, next: usize) -> bool {
        let c = self.set.get(next);
        self.chosen.iter().all(|&i| {
            let o = self.set.get(i);
            if o.agent != c.agent || !o.overlaps(c) {
                return true;
            }
            self.policy == OverlapPolicy::AllowTouching && (o.end == c.start || c.end == o.start)
        })
    }

    fn leaf(&mut self) -> Result<(), ScheduleError> {
        let mut out = self.s.clone();
        for &i in &self.chosen {
            let c = self.set.get(i);
            out.path_mut(c.agent)[c.start..=c.end].fill(c.vertex);
        }
        if !validate(&out, self.g, self.mode)?.feasible {
            return Ok(());
        }
        self.best.enumerated += 1;
        let saving = (self.base_cost - cost_moves(&out)) as u64;
        if saving > self.best.best_saving {
            self.best.best_saving = saving;
            self.best.best_selection = self.chosen.clone();
        }
        Ok(())
    }

    // Subsets are visited depth-first, excluding each candidate before including it.
    fn visit(&mut self, i: usize) -> Result<(), ScheduleError> {
        if i == self.set.len() {
            return self.leaf();
        }
        self.visit(i + 1)?;
        if self.compatible(i) {
            self.chosen.push(i);
            self.visit(i + 1)?;
            self.chosen.pop();
        }
        Ok(())
    }
}

/// Applies every per-agent-disjoint subset of the exhaustive candidates to the
/// input, keeps the ones that validate, and returns the largest move reduction.
pub fn brute_force_collapse(
    s: &Schedule,
    g: &Graph,
    mode: ValidationMode,
    cap: usize,
) -> Result<OracleResult, OracleError> {
    brute_force_collapse_with(s, g, mode, cap, OverlapPolicy::Disjoint)
}

pub fn brute_force_collapse_with(
    s: &Schedule,
    g: &Graph,
    mode: ValidationMode,
    cap: usize,
    policy: OverlapPolicy,
) -> Result<OracleResult, OracleError> {
    let set = generate_candidates(s, CandidateMode::Exhaustive);
    if set.len() > cap {
        return Err(OracleError::TooManyCandidates {
            found: set.len(),
            cap,
        });
    }
    let mut e = Enumerator {
        s,
        g,
        mode,
        set: &set,
        policy,
        base_cost: cost_moves(s),
        chosen: Vec::new(),
        best: OracleResult {
            best_saving: 0,
            best_selection: Vec::new(),
            enumerated: 0,
        },
    };
    e.visit(0)?;
    Ok(e.best)
}

/// Size of a maximum independent set by subset enumeration.
pub fn brute_force_mis(h: &Graph) -> Result<usize, OracleError> {
    let n = h.len();
    if n > MIS_VERTEX_CAP {
        return Err(OracleError::TooManyVertices {
            found: n,
            cap: MIS_VERTEX_CAP,
        });
    }
    let neighbours: Vec<u32> = h
        .vertices()
        .map(|v| h.neighbors(v).iter().fold(0u32, |m, u| m | 1 << u.0))
        .collect();
    let best = (0u32..1 << n)
        .filter(|&mask| (0..n).all(|v| mask >> v & 1 == 0 || neighbours[v] & mask == 0))
        .map(|mask| mask.count_ones() as usize)
        .max()
        .unwrap_or(0);
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::{fig2, line_graph, named_graph, schedule_of, star_graph};

    #[test]
    fn fig2_optimum() {
        let (g, s) = fig2();
        // The vertex agents alone carry 2 * C(5,2) + 2 exhaustive candidates.
        assert!(matches!(
            brute_force_collapse(&s, &g, ValidationMode::Strict, DEFAULT_CANDIDATE_CAP),
            Err(OracleError::TooManyCandidates { found: 24, cap: 20 })
        ));
        let r = brute_force_collapse(&s, &g, ValidationMode::Strict, 24).unwrap();
        assert_eq!(r.best_saving, 6);
    }

    #[test]
    fn swap_pair() {
        let g = star_graph();
        let s = schedule_of(&g, &[&["A", "B", "A"], &["C", "A", "C"]]);
        let r =
            brute_force_collapse(&s, &g, ValidationMode::Strict, DEFAULT_CANDIDATE_CAP).unwrap();
        assert_eq!(r.best_saving, 4);
        assert_eq!(r.best_selection, vec![0, 1]);
        // {}, {0,1} and {1} validate; {0} alone collides with agent 1 at A.
        assert_eq!(r.enumerated, 3);
    }

    #[test]
    fn all_wait() {
        let g = line_graph(2);
        let s = schedule_of(&g, &[&["v0", "v0", "v0"], &["v1", "v1", "v1"]]);
        let r =
            brute_force_collapse(&s, &g, ValidationMode::Strict, DEFAULT_CANDIDATE_CAP).unwrap();
        assert_eq!(r.best_saving, 0);
    }

    #[test]
    fn mis_small_graphs() {
        let edge = named_graph(&["u", "v"], &[("u", "v")]);
        let triangle = named_graph(&["a", "b", "c"], &[("a", "b"), ("b", "c"), ("c", "a")]);
        let square = named_graph(
            &["a", "b", "c", "d"],
            &[("a", "b"), ("b", "c"), ("c", "d"), ("d", "a")],
        );
        assert_eq!(brute_force_mis(&edge), Ok(1));
        assert_eq!(brute_force_mis(&triangle), Ok(1));
        assert_eq!(brute_force_mis(&square), Ok(2));
        assert!(matches!(
            brute_force_mis(&line_graph(21)),
            Err(OracleError::TooManyVertices { .. })
        ));
    }
}

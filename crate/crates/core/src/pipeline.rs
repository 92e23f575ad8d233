//! End-to-end optimization of one schedule.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidates::{
    aba_prefilter, generate_candidates, CandidateMode, CandidateSet, DEFAULT_ABA_PASSES,
};
use crate::graph::Graph;
use crate::ilp::{apply_solution, build_model, solve_exact, CollapseSolution};
use crate::metrics::{cost_moves, soc};
use crate::relations::{build_relations, RelationSet};
use crate::schedule::{validate, FeasibilityReport, Schedule, ScheduleError, ValidationMode};

pub const DEFAULT_TIME_LIMIT_MS: u64 = 5000;
pub const SOLVER_NAME: &str = "branch-and-bound";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptimizeConfig {
    pub aba_filter: bool,
    pub aba_max_passes: usize,
    pub candidates: CandidateMode,
    pub mode: ValidationMode,
    pub time_limit_ms: u64,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            aba_filter: true,
            aba_max_passes: DEFAULT_ABA_PASSES,
            candidates: CandidateMode::Reduced,
            mode: ValidationMode::Strict,
            time_limit_ms: DEFAULT_TIME_LIMIT_MS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectedAction {
    pub index: usize,
    pub agent: usize,
    pub name: String,
    pub start: usize,
    pub end: usize,
    pub vertex: String,
    pub weight: u32,
}

/// Stats emitted by `optimize`.
///
/// `saving` is the move reduction chosen by the solver. Moves removed by the ABA
/// filter are reported in `aba_removed`, so `cost_before - cost_after` equals
/// `saving + aba_removed` and `saving_ratio` is that difference over
/// `cost_before`. `n_implications` counts dependency constraints after exact
/// duplicates are merged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeStats {
    pub n_actions: usize,
    pub n_mutex: usize,
    pub n_implications: usize,
    pub n_invalid: usize,
    pub saving: u64,
    pub cost_before: usize,
    pub cost_after: usize,
    pub soc_before: usize,
    pub soc_after: usize,
    pub saving_ratio: f64,
    pub optimal: bool,
    pub build_time_ms: f64,
    pub solve_time_ms: f64,
    pub nodes_explored: u64,
    pub aba_removed: usize,
    pub aba_passes: usize,
    pub aba_fixpoint: bool,
    pub selected: Vec<SelectedAction>,
    pub solver: String,
    pub config: OptimizeConfig,
}

impl OptimizeStats {
    pub fn total_time_ms(&self) -> f64 {
        self.build_time_ms + self.solve_time_ms
    }
}

pub const TIMING_FIELDS: [&str; 2] = ["build_time_ms", "solve_time_ms"];

#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub schedule: Schedule,
    pub stats: OptimizeStats,
    pub candidates: CandidateSet,
    pub relations: RelationSet,
    pub solution: CollapseSolution,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("input schedule is infeasible: {}", .0.first().map(ToString::to_string).unwrap_or_default())]
    Infeasible(FeasibilityReport),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

fn millis(d: Duration) -> f64 {
    (d.as_secs_f64() * 1e6).round() / 1e3
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn optimize(
    s: &Schedule,
    g: &Graph,
    config: &OptimizeConfig,
) -> Result<OptimizeOutcome, OptimizeError> {
    let input_report = validate(s, g, config.mode)?;
    if !input_report.feasible {
        return Err(OptimizeError::Infeasible(input_report));
    }
    let internal =
        |what: &str, e: &dyn std::fmt::Display| OptimizeError::Internal(format!("{what}: {e}"));

    let build_start = Instant::now();
    let (filtered, aba_removed, aba_passes, aba_fixpoint) = if config.aba_filter {
        let out = aba_prefilter(s, config.aba_max_passes);
        let report = validate(&out.schedule, g, config.mode)?;
        if let Some(v) = report.first() {
            return Err(internal("ABA filter", v));
        }
        (out.schedule, out.removed, out.passes, out.fixpoint)
    } else {
        (s.clone(), 0, 0, true)
    };
    let candidates = generate_candidates(&filtered, config.candidates);
    let relations =
        build_relations(&filtered, &candidates).map_err(|e| internal("relations", &e))?;
    let model = build_model(&relations, &candidates);
    let build_time = build_start.elapsed();

    let mut solution = solve_exact(&model, Duration::from_millis(config.time_limit_ms));
    solution.build_time = build_time;
    if let Err(e) = model.check(&solution.selected) {
        return Err(internal("solver", &e));
    }
    let schedule = apply_solution(&filtered, &candidates, &solution, g, config.mode)
        .map_err(|e| internal("apply", &e))?;

    let cost_before = cost_moves(s);
    let cost_after = cost_moves(&schedule);
    if cost_after + solution.saving as usize + aba_removed != cost_before {
        return Err(OptimizeError::Internal(format!(
            "cost accounting: {cost_before} before, {cost_after} after, {} solver saving, {aba_removed} filtered",
            solution.saving
        )));
    }
    let selected = solution
        .selected
        .iter()
        .map(|&i| {
            let c = candidates.get(i);
            SelectedAction {
                index: i,
                agent: c.agent,
                name: s.agent(c.agent).name.clone(),
                start: c.start,
                end: c.end,
                vertex: g.name(c.vertex).to_string(),
                weight: c.weight,
            }
        })
        .collect();
    let stats = OptimizeStats {
        n_actions: candidates.len(),
        n_mutex: model.n_mutex(),
        n_implications: model.n_implications(),
        n_invalid: relations.invalid.len(),
        saving: solution.saving,
        cost_before,
        cost_after,
        soc_before: soc(s),
        soc_after: soc(&schedule),
        saving_ratio: ratio(cost_before - cost_after, cost_before),
        optimal: solution.optimal,
        build_time_ms: millis(build_time),
        solve_time_ms: millis(solution.solve_time),
        nodes_explored: solution.nodes_explored,
        aba_removed,
        aba_passes,
        aba_fixpoint,
        selected,
        solver: SOLVER_NAME.to_string(),
        config: *config,
    };
    Ok(OptimizeOutcome {
        schedule,
        stats,
        candidates,
        relations,
        solution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::ViolationKind;
    use crate::testing::{fig2, line_graph, schedule_of, star_graph};

    #[test]
    fn fig2_stats() {
        let (g, s) = fig2();
        let out = optimize(&s, &g, &OptimizeConfig::default()).unwrap();
        let st = &out.stats;
        assert_eq!(
            (st.cost_before, st.cost_after, st.saving, st.optimal),
            (10, 4, 6, true)
        );
        assert_eq!((st.soc_before, st.soc_after), (18, 12));
        assert_eq!(st.aba_removed, 0);
        assert!((st.saving_ratio - 0.6).abs() < 1e-12);
        let picked: Vec<_> = st
            .selected
            .iter()
            .map(|a| (a.name.as_str(), a.start, a.end))
            .collect();
        assert_eq!(picked, [("A1", 0, 6), ("B_e1", 0, 4)]);
    }

    #[test]
    fn shortest_paths_unchanged() {
        let g = line_graph(4);
        let s = schedule_of(&g, &[&["v0", "v1", "v2"], &["v3", "v3", "v3"]]);
        let out = optimize(&s, &g, &OptimizeConfig::default()).unwrap();
        assert_eq!(out.stats.saving, 0);
        assert_eq!(out.schedule, s);
    }

    #[test]
    fn infeasible_input() {
        let g = line_graph(3);
        let s = schedule_of(&g, &[&["v0", "v1", "v2"], &["v2", "v1", "v0"]]);
        match optimize(&s, &g, &OptimizeConfig::default()) {
            Err(OptimizeError::Infeasible(r)) => assert!(r.has(ViolationKind::VertexCollision)),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn aba_accounting() {
        let g = star_graph();
        let s = schedule_of(&g, &[&["A", "B", "A", "B", "A"]]);
        let out = optimize(&s, &g, &OptimizeConfig::default()).unwrap();
        assert_eq!(
            (
                out.stats.aba_removed,
                out.stats.saving,
                out.stats.cost_after
            ),
            (4, 0, 0)
        );
        let off = OptimizeConfig {
            aba_filter: false,
            ..OptimizeConfig::default()
        };
        let out = optimize(&s, &g, &off).unwrap();
        assert_eq!(
            (
                out.stats.aba_removed,
                out.stats.saving,
                out.stats.cost_after
            ),
            (0, 4, 0)
        );
    }
}

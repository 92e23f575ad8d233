//! The 0/1 program over collapse actions and its solvers.
//!
//! Maximize the total weight of selected actions subject to pairwise mutual
//! exclusions and covering implications `y_c <= sum(y over S)`.

mod exact;
mod greedy;

use std::time::Duration;

use thiserror::Error;

use crate::candidates::CandidateSet;
use crate::graph::Graph;
use crate::metrics::cost_moves;
use crate::relations::RelationSet;
use crate::schedule::{validate, Schedule, ScheduleError, ValidationMode, Violation};

pub use exact::BranchAndBound;
pub use greedy::solve_greedy;

/// Interval of one action on its agent. Actions of one group with intersecting
/// spans must be mutually exclusive; the exact solver bounds each group by the
/// best packing of disjoint spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub group: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IlpModel {
    pub weights: Vec<u32>,
    /// Pairs `(i, j)` with `i < j` and `y_i + y_j <= 1`.
    pub mutex: Vec<(usize, usize)>,
    /// Per variable, the suitable sets it implies.
    pub implications: Vec<Vec<Vec<usize>>>,
    /// Variables forced to zero, ascending.
    pub fixed_zero: Vec<usize>,
    pub spans: Vec<Span>,
}

impl IlpModel {
    /// A model without interval structure: each variable forms its own group.
    pub fn new(
        weights: Vec<u32>,
        mutex: Vec<(usize, usize)>,
        implications: Vec<Vec<Vec<usize>>>,
        fixed_zero: Vec<usize>,
    ) -> Self {
        let spans = (0..weights.len())
            .map(|i| Span {
                group: i,
                start: 0,
                end: 0,
            })
            .collect();
        let mut implications = implications;
        implications.resize(weights.len(), Vec::new());
        Self {
            weights,
            mutex,
            implications,
            fixed_zero,
            spans,
        }
    }

    pub fn n_vars(&self) -> usize {
        self.weights.len()
    }

    pub fn n_mutex(&self) -> usize {
        self.mutex.len()
    }

    pub fn n_implications(&self) -> usize {
        self.implications.iter().map(Vec::len).sum()
    }

    pub fn is_fixed(&self, var: usize) -> bool {
        self.fixed_zero.binary_search(&var).is_ok()
    }

    /// Returns the first violated constraint of `selected`, if any.
    pub fn check(&self, selected: &[usize]) -> Result<(), String> {
        let mut on = vec![false; self.n_vars()];
        for &v in selected {
            if v >= self.n_vars() {
                return Err(format!("variable {v} does not exist"));
            }
            if self.is_fixed(v) {
                return Err(format!("variable {v} is fixed to zero"));
            }
            on[v] = true;
        }
        for &(a, b) in &self.mutex {
            if on[a] && on[b] {
                return Err(format!("mutex ({a}, {b}) violated"));
            }
        }
        for &v in selected {
            for set in &self.implications[v] {
                if !set.iter().any(|&u| on[u]) {
                    return Err(format!("implication of {v} over {set:?} unsatisfied"));
                }
            }
        }
        Ok(())
    }

    pub fn saving(&self, selected: &[usize]) -> u64 {
        selected.iter().map(|&v| u64::from(self.weights[v])).sum()
    }
}

/// One variable per candidate, one mutex per exclusion pair, one covering
/// implication per dependency, invalid and zero-weight actions fixed to zero.
///
/// Fixed variables are removed from suitable sets; an implication left with an
/// empty set fixes its owner too. Fixed variables keep no constraints.
pub fn build_model(relations: &RelationSet, candidates: &CandidateSet) -> IlpModel {
    let n = candidates.len();
    let weights: Vec<u32> = candidates.actions().iter().map(|c| c.weight).collect();
    let spans = candidates
        .actions()
        .iter()
        .map(|c| Span {
            group: c.agent,
            start: c.start,
            end: c.end,
        })
        .collect();

    let mut fixed = vec![false; n];
    for &i in &relations.invalid {
        fixed[i] = true;
    }
    for (i, &w) in weights.iter().enumerate() {
        if w == 0 {
            fixed[i] = true;
        }
    }
    let mut implications = vec![Vec::<Vec<usize>>::new(); n];
    for d in &relations.dependencies {
        implications[d.action].push(d.suitable.clone());
    }
    loop {
        let mut changed = false;
        for i in 0..n {
            if fixed[i] {
                continue;
            }
            if implications[i]
                .iter()
                .any(|set| set.iter().all(|&u| fixed[u]))
            {
                fixed[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    for (i, sets) in implications.iter_mut().enumerate() {
        if fixed[i] {
            sets.clear();
            continue;
        }
        for set in sets.iter_mut() {
            set.retain(|&u| !fixed[u]);
        }
        sets.sort();
        sets.dedup();
    }
    let mut mutex: Vec<(usize, usize)> = relations
        .exclusions_in
        .iter()
        .chain(&relations.exclusions_cross)
        .copied()
        .filter(|&(a, b)| !fixed[a] && !fixed[b])
        .collect();
    mutex.sort_unstable();
    mutex.dedup();

    IlpModel {
        weights,
        mutex,
        implications,
        fixed_zero: (0..n).filter(|&i| fixed[i]).collect(),
        spans,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CollapseSolution {
    /// Selected variables, ascending.
    pub selected: Vec<usize>,
    pub saving: u64,
    pub optimal: bool,
    pub nodes_explored: u64,
    pub build_time: Duration,
    pub solve_time: Duration,
}

/// Backend that solves an [`IlpModel`]. Any implementation must return a
/// selection satisfying every constraint, whatever the time limit.
pub trait Solver {
    fn name(&self) -> &'static str;
    fn solve(&self, model: &IlpModel, time_limit: Duration) -> CollapseSolution;
}

pub fn solve_exact(model: &IlpModel, time_limit: Duration) -> CollapseSolution {
    BranchAndBound.solve(model, time_limit)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ApplyError {
    #[error("selected action {0} does not exist")]
    UnknownAction(usize),
    #[error("selected actions {0} and {1} overlap on the same agent")]
    Overlap(usize, usize),
    #[error("collapsed schedule is infeasible: {0}")]
    Infeasible(Violation),
    #[error("collapsed schedule costs {actual} moves, expected {expected}")]
    CostMismatch { expected: usize, actual: usize },
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

/// Rewrites every selected action to a wait and re-validates the result.
pub fn apply_solution(
    s: &Schedule,
    candidates: &CandidateSet,
    solution: &CollapseSolution,
    g: &Graph,
    mode: ValidationMode,
) -> Result<Schedule, ApplyError> {
    let mut chosen = Vec::with_capacity(solution.selected.len());
    for &i in &solution.selected {
        if i >= candidates.len() {
            return Err(ApplyError::UnknownAction(i));
        }
        chosen.push(i);
    }
    chosen.sort_unstable_by_key(|&i| (candidates.get(i).agent, candidates.get(i).start));
    for w in chosen.windows(2) {
        let (a, b) = (candidates.get(w[0]), candidates.get(w[1]));
        if a.agent == b.agent && a.overlaps(b) {
            return Err(ApplyError::Overlap(w[0].min(w[1]), w[0].max(w[1])));
        }
    }

    let mut out = s.clone();
    for &i in &chosen {
        let c = candidates.get(i);
        out.path_mut(c.agent)[c.start..=c.end].fill(c.vertex);
    }

    let report = validate(&out, g, mode)?;
    if let Some(v) = report.first() {
        return Err(ApplyError::Infeasible(v.clone()));
    }
    let expected = cost_moves(s).saturating_sub(solution.saving as usize);
    let actual = cost_moves(&out);
    if actual != expected {
        return Err(ApplyError::CostMismatch { expected, actual });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::candidates::{generate_candidates, CandidateMode};
    use crate::relations::build_relations;
    use crate::testing::{fig2, schedule_of, star_graph};

    const LIMIT: Duration = Duration::from_secs(5);

    fn pipeline(s: &Schedule) -> (CandidateSet, IlpModel) {
        let set = generate_candidates(s, CandidateMode::Reduced);
        let r = build_relations(s, &set).unwrap();
        let m = build_model(&r, &set);
        (set, m)
    }

    #[test]
    fn fig2_model_shape() {
        let (_, s) = fig2();
        let (_, m) = pipeline(&s);
        assert_eq!(m.n_vars(), 4);
        assert_eq!(m.n_mutex(), 1);
        assert_eq!(m.n_implications(), 2);
        assert!(m.fixed_zero.is_empty());
    }

    #[test]
    fn empty_model() {
        let m = build_model(
            &RelationSet::default(),
            &CandidateSet::from_actions(vec![], 0, CandidateMode::Reduced),
        );
        assert_eq!(m, IlpModel::default());
        let sol = solve_exact(&m, LIMIT);
        assert_eq!((sol.saving, sol.selected.len(), sol.optimal), (0, 0, true));
    }

    #[test]
    fn invalid_action_is_fixed() {
        let g = star_graph();
        let s = schedule_of(&g, &[&["A", "B", "A"], &["C", "A", "D"]]);
        let (_, m) = pipeline(&s);
        assert_eq!(m.n_vars(), 1);
        assert_eq!(m.fixed_zero, vec![0]);
        assert_eq!(solve_exact(&m, LIMIT).saving, 0);
    }

    #[test]
    fn fig2_exact() {
        let (g, s) = fig2();
        let (set, m) = pipeline(&s);
        let sol = solve_exact(&m, LIMIT);
        assert_eq!(sol.saving, 6);
        assert!(sol.optimal);
        assert!(sol.selected == vec![0, 2] || sol.selected == vec![1, 3]);
        let out = apply_solution(&s, &set, &sol, &g, ValidationMode::Strict).unwrap();
        assert_eq!(cost_moves(&out), 4);
        if sol.selected == vec![0, 2] {
            let expected = schedule_of(
                &g,
                &[
                    &["x_1"; 7],
                    &["x_2", "p_2", "p_2", "p_2", "p_2", "p_2", "x_2"],
                    &["a_e1", "a_e1", "a_e1", "a_e1", "a_e1", "x_2", "b_e1"],
                ],
            );
            assert_eq!(
                out.paths().collect::<Vec<_>>(),
                expected.paths().collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn fig2_greedy() {
        let (_, s) = fig2();
        let (_, m) = pipeline(&s);
        let sol = solve_greedy(&m);
        assert_eq!(sol.saving, 6);
        assert_eq!(sol.selected, vec![0, 2]);
        m.check(&sol.selected).unwrap();
    }

    #[test]
    fn swap_pair_collapses_both() {
        let g = star_graph();
        let s = schedule_of(&g, &[&["A", "B", "A"], &["C", "A", "C"]]);
        let (set, m) = pipeline(&s);
        let sol = solve_exact(&m, LIMIT);
        assert_eq!((sol.saving, sol.selected.clone()), (4, vec![0, 1]));
        let out = apply_solution(&s, &set, &sol, &g, ValidationMode::Strict).unwrap();
        assert_eq!(
            out.paths().collect::<Vec<_>>(),
            schedule_of(&g, &[&["A"; 3], &["C"; 3]])
                .paths()
                .collect::<Vec<_>>()
        );
        assert_eq!(cost_moves(&out), 0);
    }

    #[test]
    fn greedy_respects_fixed_dependency() {
        let m = IlpModel::new(vec![3, 1], vec![], vec![vec![vec![1]], vec![]], vec![1]);
        let sol = solve_greedy(&m);
        assert_eq!(sol.saving, 0);
        assert!(sol.selected.is_empty());
    }

    #[test]
    fn greedy_takes_everything_when_unconstrained() {
        let m = IlpModel::new(vec![3, 1, 2], vec![], vec![], vec![]);
        let sol = solve_greedy(&m);
        assert_eq!((sol.saving, sol.selected.clone()), (6, vec![0, 1, 2]));
        assert!(sol.optimal);
    }

    #[test]
    fn empty_selection_is_identity() {
        let (g, s) = fig2();
        let (set, _) = pipeline(&s);
        let out = apply_solution(
            &s,
            &set,
            &CollapseSolution::default(),
            &g,
            ValidationMode::Strict,
        )
        .unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn apply_reports_defects() {
        let (g, s) = fig2();
        let (set, _) = pipeline(&s);
        // A2 without B's second collapse collides with B at x_2.
        let bad = CollapseSolution {
            selected: vec![1],
            saving: 2,
            ..Default::default()
        };
        assert!(matches!(
            apply_solution(&s, &set, &bad, &g, ValidationMode::Strict),
            Err(ApplyError::Infeasible(_))
        ));
        let overlap = CollapseSolution {
            selected: vec![2, 3],
            saving: 8,
            ..Default::default()
        };
        assert_eq!(
            apply_solution(&s, &set, &overlap, &g, ValidationMode::Strict),
            Err(ApplyError::Overlap(2, 3))
        );
        let wrong_saving = CollapseSolution {
            selected: vec![2],
            saving: 1,
            ..Default::default()
        };
        assert!(matches!(
            apply_solution(&s, &set, &wrong_saving, &g, ValidationMode::Strict),
            Err(ApplyError::CostMismatch { .. })
        ));
    }

    #[test]
    fn check_flags_each_constraint() {
        let m = IlpModel::new(
            vec![1, 1, 1],
            vec![(0, 1)],
            vec![vec![], vec![], vec![vec![0]]],
            vec![1],
        );
        assert!(m.check(&[0, 2]).is_ok());
        assert!(m.check(&[2]).is_err());
        assert!(m.check(&[1]).is_err());
        assert!(m.check(&[7]).is_err());
    }
}

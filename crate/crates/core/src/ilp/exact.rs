//! Anytime depth-first branch-and-bound.
//!
//! The model is split into independent components (variables linked by a
//! mutex or an implication) that are searched one after another. Within a
//! component variables are branched in weight-descending order, `1` first.
//! Assignments are unit-propagated: a `1` zeroes its mutex partners and
//! forces the last open member of an implication; a `0` that empties a
//! suitable set forces the owner to `0`. A node is pruned when the current
//! saving plus the best disjoint-span packing of the open variables in each
//! group cannot beat the incumbent.

use std::time::{Duration, Instant};

use super::{solve_greedy, CollapseSolution, IlpModel, Solver};

const OPEN: i8 = -1;

#[derive(Debug, Clone, Copy, Default)]
pub struct BranchAndBound;

impl Solver for BranchAndBound {
    fn name(&self) -> &'static str {
        "branch-and-bound"
    }

    fn solve(&self, model: &IlpModel, time_limit: Duration) -> CollapseSolution {
        let started = Instant::now();
        let deadline = started.checked_add(time_limit);
        let warm = solve_greedy(model);
        let prepared = Prepared::new(model);

        let mut selected = Vec::new();
        let mut nodes = 0u64;
        let mut optimal = true;
        for component in prepared.components() {
            let incumbent: Vec<usize> = component
                .iter()
                .copied()
                .filter(|v| warm.selected.binary_search(v).is_ok())
                .collect();
            let mut search = Search::new(&prepared, &component, incumbent, deadline);
            let complete = search.run();
            nodes += search.nodes;
            optimal &= complete;
            selected.extend(search.best);
        }
        selected.sort_unstable();
        debug_assert_eq!(model.check(&selected), Ok(()));
        CollapseSolution {
            saving: model.saving(&selected),
            selected,
            optimal,
            nodes_explored: nodes,
            build_time: Duration::ZERO,
            solve_time: started.elapsed(),
        }
    }
}

/// Index structures shared by the exact and greedy solvers.
pub(super) struct Prepared<'m> {
    pub model: &'m IlpModel,
    pub fixed: Vec<bool>,
    pub mutex: Vec<Vec<usize>>,
    /// `(owner, members)` for every implication.
    pub rules: Vec<(usize, &'m [usize])>,
    /// Implications owned by each variable.
    pub owned: Vec<Vec<usize>>,
    /// Implications in which each variable is a member.
    pub watched: Vec<Vec<usize>>,
    /// Free variables, weight descending then index ascending.
    pub order: Vec<usize>,
}

impl<'m> Prepared<'m> {
    pub fn new(model: &'m IlpModel) -> Self {
        let n = model.n_vars();
        let mut fixed = vec![false; n];
        for &v in &model.fixed_zero {
            fixed[v] = true;
        }
        let mut mutex = vec![Vec::new(); n];
        for &(a, b) in &model.mutex {
            mutex[a].push(b);
            mutex[b].push(a);
        }
        let mut rules = Vec::new();
        let mut owned = vec![Vec::new(); n];
        let mut watched = vec![Vec::new(); n];
        for (owner, sets) in model.implications.iter().enumerate() {
            for set in sets {
                let id = rules.len();
                rules.push((owner, set.as_slice()));
                owned[owner].push(id);
                for &m in set.iter() {
                    watched[m].push(id);
                }
            }
        }
        let mut order: Vec<usize> = (0..n).filter(|&v| !fixed[v]).collect();
        order.sort_by_key(|&v| (std::cmp::Reverse(model.weights[v]), v));
        Self {
            model,
            fixed,
            mutex,
            rules,
            owned,
            watched,
            order,
        }
    }

    /// Connected components of free variables, each in branching order.
    fn components(&self) -> Vec<Vec<usize>> {
        let n = self.model.n_vars();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut v: usize) -> usize {
            while parent[v] != v {
                parent[v] = parent[parent[v]];
                v = parent[v];
            }
            v
        }
        let mut union = |a: usize, b: usize| {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        };
        for &(a, b) in &self.model.mutex {
            union(a, b);
        }
        for &(owner, members) in &self.rules {
            for &m in members {
                union(owner, m);
            }
        }
        let mut slot = vec![usize::MAX; n];
        let mut out: Vec<Vec<usize>> = Vec::new();
        for &v in &self.order {
            let root = find(&mut parent, v);
            if slot[root] == usize::MAX {
                slot[root] = out.len();
                out.push(Vec::new());
            }
            out[slot[root]].push(v);
        }
        out
    }
}

struct Frame {
    var: usize,
    mark: usize,
    tried_zero: bool,
}

struct Search<'p, 'm> {
    p: &'p Prepared<'m>,
    order: &'p [usize],
    value: Vec<i8>,
    trail: Vec<usize>,
    queue: Vec<(usize, i8)>,
    current: u64,
    best: Vec<usize>,
    best_saving: u64,
    nodes: u64,
    deadline: Option<Instant>,
    // Component variables per span group, sorted by span end.
    groups: Vec<Vec<usize>>,
    group_of: Vec<usize>,
    group_bound: Vec<u64>,
    dirty: Vec<bool>,
    ends: Vec<usize>,
    packing: Vec<u64>,
}

impl<'p, 'm> Search<'p, 'm> {
    fn new(
        p: &'p Prepared<'m>,
        order: &'p [usize],
        incumbent: Vec<usize>,
        deadline: Option<Instant>,
    ) -> Self {
        let model = p.model;
        let mut value = vec![OPEN; model.n_vars()];
        for (v, slot) in value.iter_mut().enumerate() {
            if p.fixed[v] {
                *slot = 0;
            }
        }
        let mut by_group: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for &v in order {
            by_group.entry(model.spans[v].group).or_default().push(v);
        }
        let groups: Vec<Vec<usize>> = by_group
            .into_values()
            .map(|mut vars| {
                vars.sort_by_key(|&v| (model.spans[v].end, model.spans[v].start, v));
                vars
            })
            .collect();
        let mut group_of = vec![usize::MAX; model.n_vars()];
        for (g, vars) in groups.iter().enumerate() {
            for &v in vars {
                group_of[v] = g;
            }
        }
        let n_groups = groups.len();
        let best_saving = model.saving(&incumbent);
        Self {
            p,
            order,
            value,
            trail: Vec::new(),
            queue: Vec::new(),
            current: 0,
            best: incumbent,
            best_saving,
            nodes: 0,
            deadline,
            groups,
            group_of,
            group_bound: vec![0; n_groups],
            dirty: vec![true; n_groups],
            ends: Vec::new(),
            packing: Vec::new(),
        }
    }

    fn touch(&mut self, v: usize) {
        if let Some(d) = self.dirty.get_mut(self.group_of[v]) {
            *d = true;
        }
    }

    fn set(&mut self, v: usize, val: i8) {
        self.value[v] = val;
        self.trail.push(v);
        self.touch(v);
        if val == 1 {
            self.current += u64::from(self.p.model.weights[v]);
        }
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let v = self.trail.pop().unwrap_or_default();
            if self.value[v] == 1 {
                self.current -= u64::from(self.p.model.weights[v]);
            }
            self.value[v] = OPEN;
            self.touch(v);
        }
    }

    /// Inspects one implication; returns false on conflict.
    fn check_rule(&mut self, rule: usize) -> bool {
        let (owner, members) = self.p.rules[rule];
        if self.value[owner] == 0 {
            return true;
        }
        let mut open = None;
        let mut n_open = 0;
        for &m in members {
            match self.value[m] {
                1 => return true,
                OPEN => {
                    n_open += 1;
                    open = Some(m);
                }
                _ => {}
            }
        }
        match (self.value[owner], n_open) {
            (1, 0) => false,
            (1, 1) => {
                if let Some(m) = open {
                    self.queue.push((m, 1));
                }
                true
            }
            (OPEN, 0) => {
                self.queue.push((owner, 0));
                true
            }
            _ => true,
        }
    }

    /// Assigns `v := val` and propagates to a fixpoint; false on conflict.
    fn assign(&mut self, v: usize, val: i8) -> bool {
        self.queue.clear();
        self.queue.push((v, val));
        while let Some((v, val)) = self.queue.pop() {
            match self.value[v] {
                OPEN => {}
                x if x == val => continue,
                _ => return false,
            }
            self.set(v, val);
            if val == 1 {
                for i in 0..self.p.mutex[v].len() {
                    let u = self.p.mutex[v][i];
                    match self.value[u] {
                        1 => return false,
                        OPEN => self.queue.push((u, 0)),
                        _ => {}
                    }
                }
                for i in 0..self.p.owned[v].len() {
                    if !self.check_rule(self.p.owned[v][i]) {
                        return false;
                    }
                }
            } else {
                for i in 0..self.p.watched[v].len() {
                    if !self.check_rule(self.p.watched[v][i]) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Current saving plus, per group, the best weight of pairwise disjoint open spans.
    fn bound(&mut self) -> u64 {
        let model = self.p.model;
        for g in 0..self.groups.len() {
            if !self.dirty[g] {
                continue;
            }
            self.dirty[g] = false;
            self.ends.clear();
            self.packing.clear();
            for &v in &self.groups[g] {
                if self.value[v] != OPEN {
                    continue;
                }
                let span = model.spans[v];
                // Packings made only of spans ending strictly before this one starts.
                let fit = self.ends.partition_point(|&e| e < span.start);
                let with =
                    u64::from(model.weights[v]) + if fit == 0 { 0 } else { self.packing[fit - 1] };
                let without = self.packing.last().copied().unwrap_or(0);
                self.ends.push(span.end);
                self.packing.push(with.max(without));
            }
            self.group_bound[g] = self.packing.last().copied().unwrap_or(0);
        }
        self.current + self.group_bound.iter().sum::<u64>()
    }

    fn next_open(&self, from: usize) -> Option<usize> {
        (from..self.order.len()).find(|&i| self.value[self.order[i]] == OPEN)
    }

    fn record_leaf(&mut self) {
        if self.current <= self.best_saving {
            return;
        }
        let selected: Vec<usize> = self
            .order
            .iter()
            .copied()
            .filter(|&v| self.value[v] == 1)
            .collect();
        let satisfied = selected.iter().all(|&v| {
            self.p.owned[v]
                .iter()
                .all(|&r| self.p.rules[r].1.iter().any(|&m| self.value[m] == 1))
        });
        if satisfied {
            self.best_saving = self.current;
            self.best = selected;
        }
    }

    fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    /// Runs the search; false if the deadline cut it short.
    fn run(&mut self) -> bool {
        let mut stack: Vec<Frame> = Vec::new();
        let mut cursor = 0;
        loop {
            // Descend.
            let mut backtrack = false;
            if self.expired() {
                return false;
            }
            self.nodes += 1;
            match self.next_open(cursor) {
                None => {
                    self.record_leaf();
                    backtrack = true;
                }
                Some(pos) => {
                    cursor = pos;
                    if self.bound() <= self.best_saving {
                        backtrack = true;
                    } else {
                        let var = self.order[pos];
                        let mark = self.trail.len();
                        if self.assign(var, 1) {
                            stack.push(Frame {
                                var,
                                mark,
                                tried_zero: false,
                            });
                        } else {
                            self.undo(mark);
                            if self.assign(var, 0) {
                                stack.push(Frame {
                                    var,
                                    mark,
                                    tried_zero: true,
                                });
                            } else {
                                self.undo(mark);
                                backtrack = true;
                            }
                        }
                    }
                }
            }
            if !backtrack {
                continue;
            }
            // Backtrack to the deepest frame that still has its 0-branch untried.
            loop {
                let Some(frame) = stack.pop() else {
                    return true;
                };
                self.undo(frame.mark);
                if frame.tried_zero {
                    continue;
                }
                if self.assign(frame.var, 0) {
                    cursor = self.order.iter().position(|&v| v == frame.var).unwrap_or(0);
                    stack.push(Frame {
                        tried_zero: true,
                        ..frame
                    });
                    break;
                }
                self.undo(frame.mark);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ilp::Span;

    const LIMIT: Duration = Duration::from_secs(10);

    fn brute(model: &IlpModel) -> u64 {
        let n = model.n_vars();
        (0u32..1 << n)
            .map(|mask| (0..n).filter(|&v| mask >> v & 1 == 1).collect::<Vec<_>>())
            .filter(|sel| model.check(sel).is_ok())
            .map(|sel| model.saving(&sel))
            .max()
            .unwrap_or(0)
    }

    #[test]
    fn implication_chain() {
        // 0 needs 1, 1 needs 2, 2 is mutex with 3 (heavy).
        let m = IlpModel::new(
            vec![5, 1, 1, 6],
            vec![(2, 3)],
            vec![vec![vec![1]], vec![vec![2]], vec![], vec![]],
            vec![],
        );
        let sol = BranchAndBound.solve(&m, LIMIT);
        assert_eq!(sol.saving, 7);
        assert_eq!(sol.selected, vec![0, 1, 2]);
        assert!(sol.optimal);
    }

    #[test]
    fn zero_time_limit_still_feasible() {
        let m = IlpModel::new(vec![2, 2, 3], vec![(0, 2), (1, 2)], vec![], vec![]);
        let sol = BranchAndBound.solve(&m, Duration::ZERO);
        assert!(!sol.optimal);
        m.check(&sol.selected).unwrap();
        assert!(sol.saving >= 3);
    }

    #[test]
    fn span_groups_bound_correctly() {
        // One group of three chained spans; the middle one overlaps both neighbours.
        let mut m = IlpModel::new(vec![3, 5, 3], vec![(0, 1), (1, 2)], vec![], vec![]);
        m.spans = vec![
            Span {
                group: 0,
                start: 0,
                end: 2,
            },
            Span {
                group: 0,
                start: 2,
                end: 4,
            },
            Span {
                group: 0,
                start: 4,
                end: 6,
            },
        ];
        let sol = BranchAndBound.solve(&m, LIMIT);
        assert_eq!(sol.saving, 6);
        assert!(sol.optimal);
    }

    #[test]
    fn matches_enumeration_on_random_models() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let n = rng.gen_range(1..=12);
            let weights: Vec<u32> = (0..n).map(|_| rng.gen_range(1..=6)).collect();
            let mut mutex = Vec::new();
            for a in 0..n {
                for b in a + 1..n {
                    if rng.gen_bool(0.2) {
                        mutex.push((a, b));
                    }
                }
            }
            let implications = (0..n)
                .map(|v| {
                    (0..rng.gen_range(0..3))
                        .map(|_| {
                            let mut set: Vec<usize> =
                                (0..n).filter(|&u| u != v && rng.gen_bool(0.25)).collect();
                            set.dedup();
                            set
                        })
                        .filter(|s| !s.is_empty())
                        .collect()
                })
                .collect();
            let fixed = (0..n).filter(|_| rng.gen_bool(0.1)).collect();
            let m = IlpModel::new(weights, mutex, implications, fixed);
            let sol = BranchAndBound.solve(&m, LIMIT);
            m.check(&sol.selected).unwrap();
            assert!(sol.optimal);
            assert_eq!(sol.saving, brute(&m), "{m:?}");
            assert!(sol.saving >= solve_greedy(&m).saving);
        }
    }
}

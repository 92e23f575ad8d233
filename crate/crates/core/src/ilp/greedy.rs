use std::time::{Duration, Instant};

use super::exact::Prepared;
use super::{CollapseSolution, IlpModel};

/// Greedy warm start. Variables are tried by weight descending; each one is
/// added together with a closure that satisfies its implications, choosing per
/// unmet suitable set the member with the fewest own implications (then the
/// heaviest). A group that hits a mutex or an unsatisfiable implication is
/// dropped as a whole.
pub fn solve_greedy(model: &IlpModel) -> CollapseSolution {
    let started = Instant::now();
    let p = Prepared::new(model);
    let n = model.n_vars();
    let mut on = vec![false; n];
    let mut blocked = vec![0u32; n];
    let mut in_group = vec![false; n];

    let compatible = |v: usize, on: &[bool], blocked: &[u32], in_group: &[bool]| {
        !p.fixed[v] && blocked[v] == 0 && !p.mutex[v].iter().any(|&u| in_group[u]) && !on[v]
    };

    for &root in &p.order {
        if on[root] || !compatible(root, &on, &blocked, &in_group) {
            continue;
        }
        let mut group = vec![root];
        in_group[root] = true;
        let mut ok = true;
        let mut cursor = 0;
        'close: while cursor < group.len() {
            let v = group[cursor];
            cursor += 1;
            for &rule in &p.owned[v] {
                let members = p.rules[rule].1;
                if members.iter().any(|&m| on[m] || in_group[m]) {
                    continue;
                }
                let pick = members
                    .iter()
                    .copied()
                    .filter(|&m| compatible(m, &on, &blocked, &in_group))
                    .min_by_key(|&m| (p.owned[m].len(), std::cmp::Reverse(model.weights[m]), m));
                match pick {
                    Some(m) => {
                        in_group[m] = true;
                        group.push(m);
                    }
                    None => {
                        ok = false;
                        break 'close;
                    }
                }
            }
        }
        for &v in &group {
            in_group[v] = false;
        }
        if ok {
            for &v in &group {
                on[v] = true;
                for &u in &p.mutex[v] {
                    blocked[u] += 1;
                }
            }
        }
    }

    let selected: Vec<usize> = (0..n).filter(|&v| on[v]).collect();
    let saving = model.saving(&selected);
    let upper: u64 = p.order.iter().map(|&v| u64::from(model.weights[v])).sum();
    CollapseSolution {
        optimal: saving == upper,
        saving,
        selected,
        nodes_explored: 0,
        build_time: Duration::ZERO,
        solve_time: started.elapsed(),
    }
}

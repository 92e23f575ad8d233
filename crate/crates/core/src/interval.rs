//! Stabbing queries over closed integer intervals.
//!
//! A static segment tree over the timestep domain `[0, horizon]`. Each interval
//! is stored in the O(log T) canonical nodes that tile it; a query walks the
//! root-to-leaf path of `k` and reports every interval stored on the way, so
//! each interval is reported at most once.

#[derive(Debug, Clone)]
pub struct IntervalIndex {
    size: usize,
    // Node `n` covers a dyadic block of the domain; children are 2n and 2n+1.
    nodes: Vec<Vec<usize>>,
}

impl IntervalIndex {
    /// Builds the index over `(start, end, id)` triples with `start <= end <= horizon`.
    pub fn build(
        horizon: usize,
        intervals: impl IntoIterator<Item = (usize, usize, usize)>,
    ) -> Self {
        let size = (horizon + 1).next_power_of_two();
        let mut index = Self {
            size,
            nodes: vec![Vec::new(); 2 * size],
        };
        for (start, end, id) in intervals {
            debug_assert!(start <= end && end <= horizon);
            index.insert(1, 0, size - 1, start, end, id);
        }
        index
    }

    fn insert(&mut self, node: usize, lo: usize, hi: usize, start: usize, end: usize, id: usize) {
        if end < lo || hi < start {
            return;
        }
        if start <= lo && hi <= end {
            self.nodes[node].push(id);
            return;
        }
        let mid = (lo + hi) / 2;
        self.insert(2 * node, lo, mid, start, end, id);
        self.insert(2 * node + 1, mid + 1, hi, start, end, id);
    }

    /// Ids of all intervals containing `k`, in ascending order.
    pub fn query(&self, k: usize) -> Vec<usize> {
        let mut out = Vec::new();
        self.query_into(k, &mut out);
        out
    }

    pub fn query_into(&self, k: usize, out: &mut Vec<usize>) {
        out.clear();
        if k >= self.size {
            return;
        }
        let mut node = 1;
        let (mut lo, mut hi) = (0, self.size - 1);
        loop {
            out.extend_from_slice(&self.nodes[node]);
            if lo == hi {
                break;
            }
            let mid = (lo + hi) / 2;
            if k <= mid {
                node *= 2;
                hi = mid;
            } else {
                node = 2 * node + 1;
                lo = mid + 1;
            }
        }
        out.sort_unstable();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_overlapping_intervals() {
        let idx = IntervalIndex::build(6, [(0, 4, 0), (2, 6, 1)]);
        assert_eq!(idx.query(3), vec![0, 1]);
        assert_eq!(idx.query(5), vec![1]);
        assert_eq!(idx.query(0), vec![0]);
        assert_eq!(idx.query(6), vec![1]);
    }

    #[test]
    fn empty_index() {
        let idx = IntervalIndex::build(10, []);
        assert!(idx.query(4).is_empty());
        assert!(idx.query(100).is_empty());
    }

    proptest! {
        #[test]
        fn agrees_with_linear_scan(
            horizon in 0usize..40,
            raw in proptest::collection::vec((0usize..40, 0usize..40), 0..30),
            k in 0usize..45,
        ) {
            let intervals: Vec<(usize, usize, usize)> = raw
                .into_iter()
                .enumerate()
                .map(|(id, (a, b))| {
                    let (a, b) = (a.min(horizon), b.min(horizon));
                    (a.min(b), a.max(b), id)
                })
                .collect();
            let idx = IntervalIndex::build(horizon, intervals.iter().copied());
            let expected: Vec<usize> = intervals
                .iter()
                .filter(|&&(a, b, _)| a <= k && k <= b)
                .map(|&(_, _, id)| id)
                .collect();
            prop_assert_eq!(idx.query(k), expected);
        }
    }
}

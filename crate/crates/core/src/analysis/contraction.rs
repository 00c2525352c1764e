//! Contraction detection: states interchangeable as unmatched nodes.

use std::collections::VecDeque;

use crate::digraph::{build_bipartite, BipartiteGraph, Matching, Orientation, SystemPattern};

use super::matching::maximum_matching;

/// A class of states each of which is unmatched under some maximum matching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractionSet {
    pub id: usize,
    /// Sorted member states.
    pub states: Vec<usize>,
    /// Smallest member that is unmatched under the canonical matching.
    pub witness_unmatched: usize,
    /// All members unmatched under the canonical matching. Its length is the
    /// number of independent measurements this set demands.
    pub unmatched: Vec<usize>,
}

impl ContractionSet {
    pub fn contains(&self, state: usize) -> bool {
        self.states.binary_search(&state).is_ok()
    }
}

/// Left nodes reachable from `start` by alternating paths in the auxiliary
/// graph (unmatched links forward, matched links reversed). Includes `start`.
pub fn alternating_reach(graph: &BipartiteGraph, matching: &Matching, start: usize) -> Vec<usize> {
    let mut seen_left = vec![false; graph.n_left()];
    let mut seen_right = vec![false; graph.n_right()];
    let mut queue = VecDeque::from([start]);
    seen_left[start] = true;
    let mut out = vec![start];
    while let Some(l) = queue.pop_front() {
        let own = matching.partner_of_left(l);
        for &r in graph.neighbours(l) {
            if Some(r) == own || seen_right[r] {
                continue;
            }
            seen_right[r] = true;
            match matching.partner_of_right(r) {
                Some(w) if !seen_left[w] => {
                    seen_left[w] = true;
                    out.push(w);
                    queue.push_back(w);
                }
                Some(_) => {}
                None => debug_assert!(false, "augmenting path found: matching is not maximum"),
            }
        }
    }
    out.sort_unstable();
    out
}

/// Contraction sets for a graph and one of its maximum matchings.
///
/// Reach sets of distinct free nodes that overlap are merged, so the result
/// partitions the union of all reach sets.
pub fn contraction_sets_for(graph: &BipartiteGraph, matching: &Matching) -> Vec<ContractionSet> {
    let n = graph.n_left();
    let mut dsu = Dsu::new(n);
    let mut member = vec![false; n];
    let free = matching.unmatched_left();
    for &u in &free {
        for v in alternating_reach(graph, matching, u) {
            member[v] = true;
            dsu.union(u, v);
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for v in (0..n).filter(|&v| member[v]) {
        let root = dsu.find(v);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push((root, Vec::new()));
        }
        groups[slot[root]].1.push(v);
    }
    // Members were pushed in ascending order, so groups are ordered by their
    // smallest state already.
    groups
        .into_iter()
        .enumerate()
        .map(|(id, (_, states))| {
            let unmatched: Vec<usize> = states
                .iter()
                .copied()
                .filter(|&v| matching.partner_of_left(v).is_none())
                .collect();
            ContractionSet {
                id,
                witness_unmatched: unmatched[0],
                unmatched,
                states,
            }
        })
        .collect()
}

/// Contraction sets of the system digraph under the default orientation.
pub fn contraction_sets(pattern: &SystemPattern) -> Vec<ContractionSet> {
    contraction_sets_with(pattern, Orientation::default())
}

pub fn contraction_sets_with(
    pattern: &SystemPattern,
    orientation: Orientation,
) -> Vec<ContractionSet> {
    let graph = build_bipartite(pattern, orientation);
    let matching = maximum_matching(&graph);
    contraction_sets_for(&graph, &matching)
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Keep the smaller index as root; purely cosmetic.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sets(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
        let p = SystemPattern::new(n, edges.to_vec(), vec![]).unwrap();
        contraction_sets(&p).into_iter().map(|c| c.states).collect()
    }

    #[test]
    fn in_star_has_two_sets() {
        assert_eq!(sets(3, &[(0, 2), (1, 2)]), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn perfect_matching_has_none() {
        assert!(sets(3, &[(0, 1), (1, 2), (2, 0)]).is_empty());
    }

    #[test]
    fn overlapping_reach_sets_merge() {
        // 0, 1, 2 all feed 3: two of them are always unmatched and the third
        // can trade places with either.
        let p = SystemPattern::new(4, vec![(0, 3), (1, 3), (2, 3)], vec![]).unwrap();
        let cs = contraction_sets(&p);
        assert_eq!(cs.len(), 2);
        assert_eq!(cs[0].states, vec![0, 1, 2]);
        assert_eq!(cs[0].unmatched.len(), 2);
        assert_eq!(cs[1].states, vec![3]);
        assert_eq!(cs[1].witness_unmatched, 3);
    }

    #[test]
    fn empty_graph_every_state_alone() {
        assert_eq!(sets(3, &[]), vec![vec![0], vec![1], vec![2]]);
    }
}

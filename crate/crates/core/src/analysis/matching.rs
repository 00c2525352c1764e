//! Maximum matching by repeated augmenting paths.

use crate::digraph::{BipartiteGraph, Matching};

/// Maximum-cardinality matching, grown one augmenting path at a time.
///
/// Free left nodes are tried in ascending order and adjacency is scanned in
/// ascending order, so the result is canonical for a given graph. Each
/// augmentation flips the links of one alternating path and grows the
/// matching by exactly one.
pub fn maximum_matching(graph: &BipartiteGraph) -> Matching {
    maximum_matching_from(graph, Matching::empty(graph))
}

/// Grows `matching` to maximum cardinality. Left nodes matched on entry stay
/// matched (augmenting paths never free a matched left node).
pub fn maximum_matching_from(graph: &BipartiteGraph, mut matching: Matching) -> Matching {
    let mut visited = vec![false; graph.n_right()];
    loop {
        let mut grown = false;
        visited.fill(false);
        for u in 0..graph.n_left() {
            if matching.partner_of_left(u).is_some() {
                continue;
            }
            if let Some(path) = augmenting_path(graph, &matching, u, &mut visited) {
                let before = matching.size();
                for (l, r) in path {
                    matching.set(l, r);
                }
                debug_assert_eq!(matching.size(), before + 1);
                grown = true;
                // Failed searches may leave right nodes marked; they stay
                // valid only until the matching changes.
                visited.fill(false);
            }
        }
        if !grown {
            return matching;
        }
    }
}

struct Frame {
    left: usize,
    next: usize,
    via: usize,
}

/// Iterative DFS for an alternating path from the free left node `start` to
/// a free right node. Returns the links to be (re)matched along the path.
fn augmenting_path(
    graph: &BipartiteGraph,
    matching: &Matching,
    start: usize,
    visited: &mut [bool],
) -> Option<Vec<(usize, usize)>> {
    let mut stack = vec![Frame {
        left: start,
        next: 0,
        via: usize::MAX,
    }];
    while let Some(top) = stack.last_mut() {
        let nbrs = graph.neighbours(top.left);
        if top.next == nbrs.len() {
            stack.pop();
            continue;
        }
        let r = nbrs[top.next];
        top.next += 1;
        if visited[r] {
            continue;
        }
        visited[r] = true;
        top.via = r;
        match matching.partner_of_right(r) {
            None => return Some(stack.iter().map(|f| (f.left, f.via)).collect()),
            Some(w) => stack.push(Frame {
                left: w,
                next: 0,
                via: usize::MAX,
            }),
        }
    }
    None
}

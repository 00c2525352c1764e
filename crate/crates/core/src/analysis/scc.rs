//! Strongly connected components and parent (sink) components.

use crate::digraph::{build_digraph, Digraph, SystemPattern};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SccPartition {
    components: Vec<Vec<usize>>,
    parent: Vec<bool>,
    component_of: Vec<usize>,
}

impl SccPartition {
    /// Components ordered by smallest member; members sorted.
    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn component(&self, id: usize) -> &[usize] {
        &self.components[id]
    }

    pub fn component_of(&self, state: usize) -> usize {
        self.component_of[state]
    }

    /// True when no link leaves the component.
    pub fn is_parent(&self, id: usize) -> bool {
        self.parent[id]
    }

    pub fn parent_flags(&self) -> &[bool] {
        &self.parent
    }

    pub fn parents(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.components.len()).filter(|&c| self.parent[c])
    }

    /// Distinct links between components, sorted.
    pub fn condensation(&self, graph: &Digraph) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = graph
            .edges()
            .map(|(j, i)| (self.component_of[j], self.component_of[i]))
            .filter(|(a, b)| a != b)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

pub fn scc_partition(pattern: &SystemPattern) -> SccPartition {
    scc_of_digraph(&build_digraph(pattern))
}

/// Tarjan's algorithm with an explicit call stack, so deep graphs cannot
/// overflow the thread stack.
pub fn scc_of_digraph(graph: &Digraph) -> SccPartition {
    const UNSEEN: usize = usize::MAX;
    let n = graph.n();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut raw: Vec<Vec<usize>> = Vec::new();
    let mut counter = 0;
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root, 0));
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut next)) = call.last_mut() {
            let succ = graph.successors(v);
            if *next < succ.len() {
                let w = succ[*next];
                *next += 1;
                if index[w] == UNSEEN {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(u, _)) = call.last() {
                low[u] = low[u].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                raw.push(comp);
            }
        }
    }

    raw.sort_unstable_by_key(|c| c[0]);
    let mut component_of = vec![0; n];
    for (id, comp) in raw.iter().enumerate() {
        for &v in comp {
            component_of[v] = id;
        }
    }
    let mut parent = vec![true; raw.len()];
    for (j, i) in graph.edges() {
        if component_of[j] != component_of[i] {
            parent[component_of[j]] = false;
        }
    }
    SccPartition {
        components: raw,
        parent,
        component_of,
    }
}

//! System digraph, its bipartite companion, and matchings over it.
//!
//! Node indices are zero-based everywhere in this crate. The JSON layer in
//! [`crate::io`] converts to and from the one-based numbering used in files
//! and reports, and error messages quote one-based values so they match what
//! the user wrote.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A sensor and the states it measures (indicator rows of `H_j`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sensor {
    pub id: String,
    /// Sorted, distinct, zero-based state indices.
    pub states: Vec<usize>,
}

impl Sensor {
    pub fn new(id: impl Into<String>, states: impl IntoIterator<Item = usize>) -> Self {
        let mut states: Vec<usize> = states.into_iter().collect();
        states.sort_unstable();
        Self {
            id: id.into(),
            states,
        }
    }

    pub fn measures(&self, state: usize) -> bool {
        self.states.binary_search(&state).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatternError {
    #[error("state count must be at least 1")]
    NoStates,
    #[error("edge [{from}, {to}] references a state outside 1..={n}")]
    EdgeOutOfRange { from: usize, to: usize, n: usize },
    #[error("duplicate edge [{from}, {to}]")]
    DuplicateEdge { from: usize, to: usize },
    #[error("duplicate sensor id {0:?}")]
    DuplicateSensor(String),
    #[error("sensor {0:?} measures no state")]
    EmptySensor(String),
    #[error("sensor {id:?} references state {state} outside 1..={n}")]
    SensorStateOutOfRange { id: String, state: usize, n: usize },
    #[error("sensor {id:?} lists state {state} more than once")]
    DuplicateSensorState { id: String, state: usize },
}

/// Sparsity structure of `A` and of every sensor's measurement rows.
///
/// An edge `(j, i)` is the link `x_j -> x_i`, present when `a_ij != 0`.
/// Edge order is preserved as given so that files round-trip.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemPattern {
    n: usize,
    edges: Vec<(usize, usize)>,
    sensors: Vec<Sensor>,
}

impl SystemPattern {
    /// Validates and builds a pattern from zero-based indices.
    pub fn new(
        n: usize,
        edges: Vec<(usize, usize)>,
        sensors: Vec<Sensor>,
    ) -> Result<Self, PatternError> {
        if n == 0 {
            return Err(PatternError::NoStates);
        }
        let mut seen = HashSet::with_capacity(edges.len());
        for &(j, i) in &edges {
            if j >= n || i >= n {
                return Err(PatternError::EdgeOutOfRange {
                    from: j + 1,
                    to: i + 1,
                    n,
                });
            }
            if !seen.insert((j, i)) {
                return Err(PatternError::DuplicateEdge {
                    from: j + 1,
                    to: i + 1,
                });
            }
        }
        let pattern = Self {
            n,
            edges,
            sensors: Vec::new(),
        };
        pattern.with_sensors(sensors)
    }

    /// Same pattern with its sensor list replaced.
    pub fn with_sensors(&self, sensors: Vec<Sensor>) -> Result<Self, PatternError> {
        let mut ids = HashSet::new();
        for s in &sensors {
            if !ids.insert(s.id.as_str()) {
                return Err(PatternError::DuplicateSensor(s.id.clone()));
            }
            if s.states.is_empty() {
                return Err(PatternError::EmptySensor(s.id.clone()));
            }
            for (k, &x) in s.states.iter().enumerate() {
                if x >= self.n {
                    return Err(PatternError::SensorStateOutOfRange {
                        id: s.id.clone(),
                        state: x + 1,
                        n: self.n,
                    });
                }
                if k > 0 && s.states[k - 1] == x {
                    return Err(PatternError::DuplicateSensorState {
                        id: s.id.clone(),
                        state: x + 1,
                    });
                }
            }
        }
        Ok(Self {
            n: self.n,
            edges: self.edges.clone(),
            sensors,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn sensors(&self) -> &[Sensor] {
        &self.sensors
    }

    pub fn sensor(&self, id: &str) -> Option<&Sensor> {
        self.sensors.iter().find(|s| s.id == id)
    }

    /// Pattern without the named sensor; `None` if no such sensor exists.
    pub fn without_sensor(&self, id: &str) -> Option<Self> {
        let idx = self.sensors.iter().position(|s| s.id == id)?;
        let mut next = self.clone();
        next.sensors.remove(idx);
        Some(next)
    }

    /// Is `state` measured by any sensor?
    pub fn is_measured(&self, state: usize) -> bool {
        self.sensors.iter().any(|s| s.measures(state))
    }
}

/// Forward and reverse adjacency of the system digraph. Lists are sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Digraph {
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
}

impl Digraph {
    pub fn n(&self) -> usize {
        self.succ.len()
    }

    /// States `i` with a link `x_v -> x_i`.
    pub fn successors(&self, v: usize) -> &[usize] {
        &self.succ[v]
    }

    pub fn predecessors(&self, v: usize) -> &[usize] {
        &self.pred[v]
    }

    /// Edge list in (source, target) order, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(j, out)| out.iter().map(move |&i| (j, i)))
    }
}

pub fn build_digraph(pattern: &SystemPattern) -> Digraph {
    let n = pattern.n();
    let mut succ = vec![Vec::new(); n];
    let mut pred = vec![Vec::new(); n];
    for &(j, i) in pattern.edges() {
        succ[j].push(i);
        pred[i].push(j);
    }
    for list in succ.iter_mut().chain(pred.iter_mut()) {
        list.sort_unstable();
    }
    Digraph { succ, pred }
}

/// Which endpoint of an edge `x_j -> x_i` becomes the left (`V+`) node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// Left endpoint is the target `i`: the literal construction, which
    /// follows the controllability convention.
    Paper,
    /// Left endpoint is the source `j`, so a state is matched through an
    /// outgoing link and unmatched states are the ones needing measurement.
    #[default]
    Transposed,
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::Paper => "paper",
            Orientation::Transposed => "transposed",
        })
    }
}

impl FromStr for Orientation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(Orientation::Paper),
            "transposed" => Ok(Orientation::Transposed),
            other => Err(format!(
                "unknown orientation {other:?} (expected \"paper\" or \"transposed\")"
            )),
        }
    }
}

/// Bipartite graph with links from left nodes to right nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    n_right: usize,
    adj: Vec<Vec<usize>>,
}

impl BipartiteGraph {
    /// Builds from a left-indexed adjacency; lists are sorted and must not
    /// contain duplicates or out-of-range right nodes.
    pub fn from_adjacency(n_right: usize, mut adj: Vec<Vec<usize>>) -> Self {
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
            debug_assert!(list.iter().all(|&r| r < n_right));
        }
        Self { n_right, adj }
    }

    pub fn n_left(&self) -> usize {
        self.adj.len()
    }

    pub fn n_right(&self) -> usize {
        self.n_right
    }

    pub fn neighbours(&self, left: usize) -> &[usize] {
        &self.adj[left]
    }

    pub fn has_link(&self, left: usize, right: usize) -> bool {
        self.adj
            .get(left)
            .is_some_and(|l| l.binary_search(&right).is_ok())
    }

    pub fn link_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }

    /// `(left, right)` pairs in left-major sorted order.
    pub fn links(&self) -> Vec<(usize, usize)> {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(l, rs)| rs.iter().map(move |&r| (l, r)))
            .collect()
    }

    /// Transposed bipartite graph of `pattern` with one extra right node per
    /// measurement row, i.e. per (sensor, measured state) pair, numbered from
    /// `n` in sensor order. A matching covering every left node here is the
    /// generic full-column-rank condition on `[A; H]`.
    pub fn with_sensor_rows(pattern: &SystemPattern) -> Self {
        let n = pattern.n();
        let mut adj = vec![Vec::new(); n];
        for &(j, i) in pattern.edges() {
            adj[j].push(i);
        }
        let mut row = n;
        for s in pattern.sensors() {
            for &x in &s.states {
                adj[x].push(row);
                row += 1;
            }
        }
        Self::from_adjacency(row, adj)
    }
}

pub fn build_bipartite(pattern: &SystemPattern, orientation: Orientation) -> BipartiteGraph {
    let n = pattern.n();
    let mut adj = vec![Vec::new(); n];
    for &(j, i) in pattern.edges() {
        match orientation {
            Orientation::Transposed => adj[j].push(i),
            Orientation::Paper => adj[i].push(j),
        }
    }
    BipartiteGraph::from_adjacency(n, adj)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchingError {
    #[error("({left}, {right}) is not a link of the bipartite graph")]
    NotALink { left: usize, right: usize },
    #[error("left node {0} is used by two matched links")]
    SharedLeft(usize),
    #[error("right node {0} is used by two matched links")]
    SharedRight(usize),
}

/// A set of pairwise disjoint links.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    left: Vec<Option<usize>>,
    right: Vec<Option<usize>>,
}

impl Matching {
    pub fn empty(graph: &BipartiteGraph) -> Self {
        Self {
            left: vec![None; graph.n_left()],
            right: vec![None; graph.n_right()],
        }
    }

    /// Validates that every pair is a link and that no endpoint repeats.
    pub fn from_pairs(
        graph: &BipartiteGraph,
        pairs: &[(usize, usize)],
    ) -> Result<Self, MatchingError> {
        let mut m = Self::empty(graph);
        for &(l, r) in pairs {
            if !graph.has_link(l, r) {
                return Err(MatchingError::NotALink { left: l, right: r });
            }
            if m.left[l].is_some() {
                return Err(MatchingError::SharedLeft(l));
            }
            if m.right[r].is_some() {
                return Err(MatchingError::SharedRight(r));
            }
            m.left[l] = Some(r);
            m.right[r] = Some(l);
        }
        Ok(m)
    }

    pub fn size(&self) -> usize {
        self.left.iter().flatten().count()
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.left
            .iter()
            .enumerate()
            .filter_map(|(l, r)| r.map(|r| (l, r)))
            .collect()
    }

    pub fn partner_of_left(&self, left: usize) -> Option<usize> {
        self.left[left]
    }

    pub fn partner_of_right(&self, right: usize) -> Option<usize> {
        self.right[right]
    }

    pub fn matched_left(&self) -> Vec<usize> {
        (0..self.left.len())
            .filter(|&l| self.left[l].is_some())
            .collect()
    }

    /// `δM`: left nodes touched by no matched link.
    pub fn unmatched_left(&self) -> Vec<usize> {
        (0..self.left.len())
            .filter(|&l| self.left[l].is_none())
            .collect()
    }

    pub(crate) fn set(&mut self, left: usize, right: usize) {
        self.left[left] = Some(right);
        self.right[right] = Some(left);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> SystemPattern {
        SystemPattern::new(3, vec![(0, 1), (1, 2)], vec![]).unwrap()
    }

    #[test]
    fn chain_adjacency() {
        let g = build_digraph(&chain());
        assert_eq!(g.successors(0), &[1]);
        assert_eq!(g.successors(1), &[2]);
        assert!(g.successors(2).is_empty());
        assert_eq!(g.predecessors(2), &[1]);
    }

    #[test]
    fn self_loop_is_kept() {
        let p = SystemPattern::new(1, vec![(0, 0)], vec![]).unwrap();
        assert_eq!(build_digraph(&p).successors(0), &[0]);
    }

    #[test]
    fn orientation_decides_left_endpoint() {
        let t = build_bipartite(&chain(), Orientation::Transposed);
        assert_eq!(t.links(), vec![(0, 1), (1, 2)]);
        let p = build_bipartite(&chain(), Orientation::Paper);
        assert_eq!(p.links(), vec![(1, 0), (2, 1)]);
    }

    #[test]
    fn validation_names_offending_edge() {
        let err = SystemPattern::new(2, vec![(0, 1), (1, 2)], vec![]).unwrap_err();
        assert_eq!(
            err.to_string(),
            "edge [2, 3] references a state outside 1..=2"
        );
        let err = SystemPattern::new(2, vec![(0, 1), (0, 1)], vec![]).unwrap_err();
        assert_eq!(err, PatternError::DuplicateEdge { from: 1, to: 2 });
    }

    #[test]
    fn sensor_validation() {
        let p = chain();
        assert!(matches!(
            p.with_sensors(vec![Sensor::new("a", []), Sensor::new("b", [0])]),
            Err(PatternError::EmptySensor(_))
        ));
        assert!(matches!(
            p.with_sensors(vec![Sensor::new("a", [0]), Sensor::new("a", [1])]),
            Err(PatternError::DuplicateSensor(_))
        ));
        assert!(matches!(
            p.with_sensors(vec![Sensor::new("a", [3])]),
            Err(PatternError::SensorStateOutOfRange { state: 4, .. })
        ));
        assert!(matches!(
            p.with_sensors(vec![Sensor::new("a", [1, 1])]),
            Err(PatternError::DuplicateSensorState { state: 2, .. })
        ));
    }

    #[test]
    fn matching_rejects_shared_endpoints() {
        let g = BipartiteGraph::from_adjacency(2, vec![vec![0, 1], vec![0]]);
        assert!(Matching::from_pairs(&g, &[(0, 0), (1, 0)]).is_err());
        assert!(Matching::from_pairs(&g, &[(0, 0), (0, 1)]).is_err());
        assert!(Matching::from_pairs(&g, &[(1, 1)]).is_err());
        let m = Matching::from_pairs(&g, &[(0, 1), (1, 0)]).unwrap();
        assert_eq!(m.size(), 2);
        assert!(m.unmatched_left().is_empty());
    }

    #[test]
    fn sensor_rows_extend_right_side() {
        let p = chain()
            .with_sensors(vec![Sensor::new("y", [2]), Sensor::new("z", [0, 1])])
            .unwrap();
        let g = BipartiteGraph::with_sensor_rows(&p);
        assert_eq!(g.n_right(), 6);
        assert!(g.has_link(2, 3));
        assert!(g.has_link(0, 4));
        assert!(g.has_link(1, 5));
    }
}

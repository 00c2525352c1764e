//! Structural analysis: matchings, contractions, SCCs, sensor placement and
//! classification, and the structural observability verdict.
//!
//! A system is structurally observable iff
//! 1. the bipartite graph of `[A; H]` (states on the left, state rows and
//!    sensor rows on the right) has a matching covering every state, and
//! 2. every parent SCC contains a measured state.
//!
//! Condition 1 fails exactly when some contraction set holds more unmatched
//! states than it has sensors; condition 2 is the reachability requirement.

mod contraction;
mod matching;
mod scc;

use serde::{Deserialize, Serialize};

pub use contraction::{
    alternating_reach, contraction_sets, contraction_sets_for, contraction_sets_with,
    ContractionSet,
};
pub use matching::{maximum_matching, maximum_matching_from};
pub use scc::{scc_of_digraph, scc_partition, SccPartition};

use crate::digraph::{
    build_bipartite, BipartiteGraph, Matching, Orientation, Sensor, SystemPattern,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorKind {
    Alpha,
    Beta,
    Redundant,
}

/// One measurement the minimal placement asks for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Requirement {
    pub state: usize,
    pub kind: SensorKind,
    pub contraction: Option<usize>,
    pub parent_scc: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    pub requirements: Vec<Requirement>,
}

impl Placement {
    /// Number of sensors, `m`.
    pub fn count(&self) -> usize {
        self.requirements.len()
    }

    pub fn alpha_count(&self) -> usize {
        self.requirements
            .iter()
            .filter(|r| r.kind == SensorKind::Alpha)
            .count()
    }

    pub fn beta_count(&self) -> usize {
        self.requirements
            .iter()
            .filter(|r| r.kind == SensorKind::Beta)
            .count()
    }

    /// One single-state sensor per requirement, named `a1, a2, ...` for α
    /// and `b1, b2, ...` for β.
    pub fn to_sensors(&self) -> Vec<Sensor> {
        let (mut a, mut b) = (0, 0);
        self.requirements
            .iter()
            .map(|r| {
                let id = if r.kind == SensorKind::Alpha {
                    a += 1;
                    format!("a{a}")
                } else {
                    b += 1;
                    format!("b{b}")
                };
                Sensor::new(id, [r.state])
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensorRole {
    pub id: String,
    pub kind: SensorKind,
    /// Contraction sets this sensor measures into.
    pub contractions: Vec<usize>,
    /// Parent SCCs for which this sensor is the designated coverer.
    pub parent_sccs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// Some contraction holds more unmatched states than sensors. `states`
    /// are the states any of which would close the gap, `missing` how many
    /// measurements are still needed among them.
    UncoveredContraction {
        contraction: Option<usize>,
        states: Vec<usize>,
        missing: usize,
    },
    UncoveredParentScc {
        scc: usize,
        states: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensorClassification {
    pub roles: Vec<SensorRole>,
    pub violations: Vec<Violation>,
}

impl SensorClassification {
    pub fn role(&self, id: &str) -> Option<&SensorRole> {
        self.roles.iter().find(|r| r.id == id)
    }

    pub fn count(&self, kind: SensorKind) -> usize {
        self.roles.iter().filter(|r| r.kind == kind).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservabilityVerdict {
    pub observable: bool,
    pub violations: Vec<Violation>,
}

/// Everything structural about one pattern, computed once on the
/// transposed bipartite graph.
#[derive(Debug, Clone)]
pub struct StructuralAnalysis {
    pub graph: BipartiteGraph,
    pub matching: Matching,
    pub contractions: Vec<ContractionSet>,
    pub sccs: SccPartition,
}

/// Matching and contractions under a chosen orientation, for reports.
#[derive(Debug, Clone)]
pub struct OrientedView {
    pub orientation: Orientation,
    pub graph: BipartiteGraph,
    pub matching: Matching,
    pub contractions: Vec<ContractionSet>,
}

pub fn oriented_view(pattern: &SystemPattern, orientation: Orientation) -> OrientedView {
    let graph = build_bipartite(pattern, orientation);
    let matching = maximum_matching(&graph);
    let contractions = contraction_sets_for(&graph, &matching);
    OrientedView {
        orientation,
        graph,
        matching,
        contractions,
    }
}

impl StructuralAnalysis {
    pub fn new(pattern: &SystemPattern) -> Self {
        let OrientedView {
            graph,
            matching,
            contractions,
            ..
        } = oriented_view(pattern, Orientation::Transposed);
        Self {
            graph,
            matching,
            contractions,
            sccs: scc_partition(pattern),
        }
    }

    pub fn contraction_of(&self, state: usize) -> Option<&ContractionSet> {
        self.contractions.iter().find(|c| c.contains(state))
    }

    /// Minimal placement: every state left unmatched by a maximum matching
    /// gets an α requirement, and every parent SCC not already hit gets one
    /// β requirement.
    ///
    /// The maximum matching is chosen so that as many unmatched states as
    /// possible fall inside distinct parent SCCs (one matching on the
    /// bipartite graph extended with a right node per parent SCC), which
    /// makes the total count minimal. It starts from the canonical matching,
    /// so when no such trade is possible the α states are exactly `δM`.
    pub fn minimal_placement(&self) -> Placement {
        let n = self.graph.n_left();
        let parents: Vec<usize> = self.sccs.parents().collect();
        let mut adj: Vec<Vec<usize>> = (0..n).map(|l| self.graph.neighbours(l).to_vec()).collect();
        for (k, &scc) in parents.iter().enumerate() {
            for &x in self.sccs.component(scc) {
                adj[x].push(n + k);
            }
        }
        let extended = BipartiteGraph::from_adjacency(n + parents.len(), adj);
        let start = Matching::from_pairs(&extended, &self.matching.pairs())
            .expect("canonical matching is a matching of the extended graph");
        let m = maximum_matching_from(&extended, start);

        let mut requirements = Vec::new();
        for x in 0..n {
            match m.partner_of_left(x) {
                Some(r) if r < n => continue,
                _ => {}
            }
            let scc = self.sccs.component_of(x);
            requirements.push(Requirement {
                state: x,
                kind: SensorKind::Alpha,
                contraction: self.contraction_of(x).map(|c| c.id),
                parent_scc: self.sccs.is_parent(scc).then_some(scc),
            });
        }
        for scc in parents {
            let members = self.sccs.component(scc);
            if requirements.iter().any(|r| members.contains(&r.state)) {
                continue;
            }
            // Prefer a state outside every contraction so the sensor is a
            // plain β sensor.
            let state = members
                .iter()
                .copied()
                .find(|&v| self.contraction_of(v).is_none())
                .unwrap_or(members[0]);
            requirements.push(Requirement {
                state,
                kind: SensorKind::Beta,
                contraction: self.contraction_of(state).map(|c| c.id),
                parent_scc: Some(scc),
            });
        }
        Placement { requirements }
    }

    /// Labels each sensor α (measures a contraction member), β (designated
    /// coverer of a parent SCC) or redundant. α takes precedence; a parent
    /// SCC prefers a non-α sensor as its designated coverer.
    pub fn classify(&self, pattern: &SystemPattern) -> SensorClassification {
        let mut roles: Vec<SensorRole> = pattern
            .sensors()
            .iter()
            .map(|s| {
                let mut contractions: Vec<usize> = s
                    .states
                    .iter()
                    .filter_map(|&x| self.contraction_of(x).map(|c| c.id))
                    .collect();
                contractions.dedup();
                SensorRole {
                    id: s.id.clone(),
                    kind: if contractions.is_empty() {
                        SensorKind::Redundant
                    } else {
                        SensorKind::Alpha
                    },
                    contractions,
                    parent_sccs: Vec::new(),
                }
            })
            .collect();
        for scc in self.sccs.parents() {
            let members = self.sccs.component(scc);
            let coverers: Vec<usize> = pattern
                .sensors()
                .iter()
                .enumerate()
                .filter(|(_, s)| s.states.iter().any(|x| members.contains(x)))
                .map(|(k, _)| k)
                .collect();
            let designated = coverers
                .iter()
                .copied()
                .find(|&k| roles[k].kind != SensorKind::Alpha)
                .or_else(|| coverers.first().copied());
            if let Some(k) = designated {
                roles[k].parent_sccs.push(scc);
                if roles[k].kind == SensorKind::Redundant {
                    roles[k].kind = SensorKind::Beta;
                }
            }
        }
        SensorClassification {
            roles,
            violations: self.violations(pattern),
        }
    }

    pub fn observability(&self, pattern: &SystemPattern) -> ObservabilityVerdict {
        let violations = self.violations(pattern);
        ObservabilityVerdict {
            observable: violations.is_empty(),
            violations,
        }
    }

    fn violations(&self, pattern: &SystemPattern) -> Vec<Violation> {
        let mut out = Vec::new();
        let augmented = BipartiteGraph::with_sensor_rows(pattern);
        let m = maximum_matching(&augmented);
        for residual in contraction_sets_for(&augmented, &m) {
            out.push(Violation::UncoveredContraction {
                contraction: self
                    .contractions
                    .iter()
                    .find(|c| residual.states.iter().any(|&x| c.contains(x)))
                    .map(|c| c.id),
                missing: residual.unmatched.len(),
                states: residual.states,
            });
        }
        for scc in self.sccs.parents() {
            let members = self.sccs.component(scc);
            if !members.iter().any(|&x| pattern.is_measured(x)) {
                out.push(Violation::UncoveredParentScc {
                    scc,
                    states: members.to_vec(),
                });
            }
        }
        out
    }
}

pub fn minimal_sensor_placement(pattern: &SystemPattern) -> Placement {
    StructuralAnalysis::new(pattern).minimal_placement()
}

pub fn classify_sensors(pattern: &SystemPattern) -> SensorClassification {
    StructuralAnalysis::new(pattern).classify(pattern)
}

/// Structural observability of `(A, H)`. The verdict does not depend on the
/// bipartite orientation chosen for reporting.
pub fn structural_observability(pattern: &SystemPattern) -> ObservabilityVerdict {
    StructuralAnalysis::new(pattern).observability(pattern)
}

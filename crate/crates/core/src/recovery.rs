//! Replacement planning after a sensor failure.
//!
//! An α sensor is replaced by a measurement of another member of its
//! contraction set; a β sensor by another state of the parent SCC it covers.
//! Every candidate is checked by re-running the structural test on the
//! substituted pattern, and the lowest verified index is chosen.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{
    structural_observability, SensorKind, SensorRole, StructuralAnalysis, Violation,
};
use crate::digraph::{Sensor, SystemPattern};

/// A sensor stops measuring at `step`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureEvent {
    pub sensor_id: String,
    pub step: usize,
}

impl FailureEvent {
    pub fn new(sensor_id: impl Into<String>, step: usize) -> Self {
        Self {
            sensor_id: sensor_id.into(),
            step,
        }
    }
}

/// How the replacement sensor joins the estimator network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Connectivity {
    /// Broadcasts its measurement to every sensor, as the failed α did.
    Hub,
    /// Joins the strongly connected prediction-sharing network.
    StronglyConnected,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveryPlan {
    pub failed_sensor: String,
    pub failed_kind: SensorKind,
    /// The state whose role is being handed over.
    pub failed_state: usize,
    /// Contraction or parent-SCC siblings of `failed_state`, ascending.
    pub equivalent_states: Vec<usize>,
    /// The siblings for which the substituted pattern passed the check.
    pub verified_states: Vec<usize>,
    pub chosen_state: Option<usize>,
    pub connectivity: Connectivity,
    pub feasible: bool,
    pub replacement_id: String,
    /// The failed sensor held both roles; this plan restores only its own
    /// condition and the sibling plan restores the other.
    pub partial: bool,
    pub diagnostic: Option<String>,
}

/// Plans for every role the failed sensor held.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveryBundle {
    pub alpha: Option<RecoveryPlan>,
    pub beta: Option<RecoveryPlan>,
}

impl RecoveryBundle {
    pub fn plans(&self) -> impl Iterator<Item = &RecoveryPlan> {
        self.alpha.iter().chain(self.beta.iter())
    }

    pub fn feasible(&self) -> bool {
        self.plans().all(|p| p.feasible)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecoveryError {
    #[error("unknown sensor {0:?}")]
    UnknownSensor(String),
    #[error("sensor {id:?} is {actual:?}, not {expected:?}")]
    WrongKind {
        id: String,
        expected: SensorKind,
        actual: SensorKind,
    },
    #[error("sensor {0:?} is redundant; its failure needs no recovery")]
    Redundant(String),
    #[error("plan for sensor {0:?} is infeasible")]
    Infeasible(String),
    #[error("plan for sensor {0:?} would re-measure the failed state")]
    IdentityPlan(String),
    #[error("replacement id {0:?} is already in use")]
    IdCollision(String),
    #[error("internal consistency: applying the plan for {id:?} left violations: {detail}")]
    Inconsistent { id: String, detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scope {
    Full,
    Matching,
    Reachability,
}

fn passes(pattern: &SystemPattern, scope: Scope) -> Result<(), Vec<Violation>> {
    let verdict = structural_observability(pattern);
    let left: Vec<Violation> = verdict
        .violations
        .into_iter()
        .filter(|v| {
            matches!(
                (scope, v),
                (Scope::Full, _)
                    | (Scope::Matching, Violation::UncoveredContraction { .. })
                    | (Scope::Reachability, Violation::UncoveredParentScc { .. })
            )
        })
        .collect();
    if left.is_empty() {
        Ok(())
    } else {
        Err(left)
    }
}

fn substitute(
    pattern: &SystemPattern,
    failed: &str,
    replacement: &str,
    state: usize,
) -> Result<SystemPattern, RecoveryError> {
    let mut sensors: Vec<Sensor> = pattern
        .sensors()
        .iter()
        .filter(|s| s.id != failed)
        .cloned()
        .collect();
    if sensors.iter().any(|s| s.id == replacement) {
        return Err(RecoveryError::IdCollision(replacement.to_string()));
    }
    sensors.push(Sensor::new(replacement, [state]));
    Ok(pattern
        .with_sensors(sensors)
        .expect("replacement state comes from the pattern"))
}

struct Context<'a> {
    pattern: &'a SystemPattern,
    analysis: StructuralAnalysis,
    role: SensorRole,
    sensor: &'a Sensor,
}

impl<'a> Context<'a> {
    fn new(pattern: &'a SystemPattern, id: &str) -> Result<Self, RecoveryError> {
        let sensor = pattern
            .sensor(id)
            .ok_or_else(|| RecoveryError::UnknownSensor(id.to_string()))?;
        let analysis = StructuralAnalysis::new(pattern);
        let role = analysis
            .classify(pattern)
            .role(id)
            .cloned()
            .expect("sensor is in the pattern");
        Ok(Self {
            pattern,
            analysis,
            role,
            sensor,
        })
    }

    fn is_dual(&self) -> bool {
        self.role.kind == SensorKind::Alpha && !self.role.parent_sccs.is_empty()
    }

    fn plan(
        &self,
        kind: SensorKind,
        failed_state: usize,
        siblings: &[usize],
        replacement_id: String,
    ) -> Result<RecoveryPlan, RecoveryError> {
        let partial = self.is_dual();
        let scope = match (partial, kind) {
            (false, _) => Scope::Full,
            (true, SensorKind::Alpha) => Scope::Matching,
            (true, _) => Scope::Reachability,
        };
        let equivalent_states: Vec<usize> = siblings
            .iter()
            .copied()
            .filter(|&s| s != failed_state)
            .collect();
        let mut verified_states = Vec::new();
        for &s in &equivalent_states {
            let q = substitute(self.pattern, &self.sensor.id, &replacement_id, s)?;
            if passes(&q, scope).is_ok() {
                verified_states.push(s);
            }
        }
        let chosen_state = verified_states.first().copied();
        let diagnostic = if equivalent_states.is_empty() {
            Some(match kind {
                SensorKind::Alpha => format!(
                    "contraction of state {} is a singleton; no equivalent state exists",
                    failed_state + 1
                ),
                _ => format!(
                    "parent SCC of state {} is a singleton (self-cycle); no equivalent state exists",
                    failed_state + 1
                ),
            })
        } else if chosen_state.is_none() {
            Some("no equivalent state passes the structural check when substituted".to_string())
        } else {
            None
        };
        Ok(RecoveryPlan {
            failed_sensor: self.sensor.id.clone(),
            failed_kind: kind,
            failed_state,
            equivalent_states,
            verified_states,
            chosen_state,
            connectivity: if kind == SensorKind::Alpha {
                Connectivity::Hub
            } else {
                Connectivity::StronglyConnected
            },
            feasible: chosen_state.is_some(),
            replacement_id,
            partial,
            diagnostic,
        })
    }

    fn alpha_plan(&self, replacement_id: String) -> Result<RecoveryPlan, RecoveryError> {
        let (state, contraction) = self
            .sensor
            .states
            .iter()
            .find_map(|&x| self.analysis.contraction_of(x).map(|c| (x, c)))
            .expect("α sensors measure a contraction member");
        self.plan(
            SensorKind::Alpha,
            state,
            &contraction.states,
            replacement_id,
        )
    }

    fn beta_plan(&self, replacement_id: String) -> Result<RecoveryPlan, RecoveryError> {
        let scc = self.role.parent_sccs[0];
        let members = self.analysis.sccs.component(scc);
        let state = *self
            .sensor
            .states
            .iter()
            .find(|x| members.contains(x))
            .expect("β sensors measure their parent SCC");
        self.plan(SensorKind::Beta, state, members, replacement_id)
    }
}

fn wrong_kind(ctx: &Context, expected: SensorKind) -> RecoveryError {
    if ctx.role.kind == SensorKind::Redundant {
        RecoveryError::Redundant(ctx.sensor.id.clone())
    } else {
        RecoveryError::WrongKind {
            id: ctx.sensor.id.clone(),
            expected,
            actual: ctx.role.kind,
        }
    }
}

/// Replacement for a failed α sensor among its contraction siblings.
pub fn plan_alpha_recovery(
    pattern: &SystemPattern,
    failed: &FailureEvent,
) -> Result<RecoveryPlan, RecoveryError> {
    let ctx = Context::new(pattern, &failed.sensor_id)?;
    if ctx.role.kind != SensorKind::Alpha {
        return Err(wrong_kind(&ctx, SensorKind::Alpha));
    }
    ctx.alpha_plan(format!("{}'", failed.sensor_id))
}

/// Replacement for a failed β sensor among its parent-SCC siblings. Also
/// accepts an α sensor that is the designated coverer of a parent SCC.
pub fn plan_beta_recovery(
    pattern: &SystemPattern,
    failed: &FailureEvent,
) -> Result<RecoveryPlan, RecoveryError> {
    let ctx = Context::new(pattern, &failed.sensor_id)?;
    if ctx.role.parent_sccs.is_empty() {
        return Err(wrong_kind(&ctx, SensorKind::Beta));
    }
    let suffix = if ctx.is_dual() { "''" } else { "'" };
    ctx.beta_plan(format!("{}{suffix}", failed.sensor_id))
}

/// Plans every role of the failed sensor. A sensor holding both an α role
/// and a parent-SCC coverage gets two plans, each checked only against its
/// own condition.
pub fn plan_recovery(
    pattern: &SystemPattern,
    failed: &FailureEvent,
) -> Result<RecoveryBundle, RecoveryError> {
    let ctx = Context::new(pattern, &failed.sensor_id)?;
    let id = &failed.sensor_id;
    match ctx.role.kind {
        SensorKind::Redundant => Err(RecoveryError::Redundant(id.clone())),
        SensorKind::Beta => Ok(RecoveryBundle {
            alpha: None,
            beta: Some(ctx.beta_plan(format!("{id}'"))?),
        }),
        SensorKind::Alpha => Ok(RecoveryBundle {
            alpha: Some(ctx.alpha_plan(format!("{id}'"))?),
            beta: if ctx.is_dual() {
                Some(ctx.beta_plan(format!("{id}''"))?)
            } else {
                None
            },
        }),
    }
}

fn check_applicable(plan: &RecoveryPlan) -> Result<usize, RecoveryError> {
    let chosen = match plan.chosen_state {
        Some(s) if plan.feasible => s,
        _ => return Err(RecoveryError::Infeasible(plan.failed_sensor.clone())),
    };
    if chosen == plan.failed_state {
        return Err(RecoveryError::IdentityPlan(plan.failed_sensor.clone()));
    }
    Ok(chosen)
}

fn describe(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| match v {
            Violation::UncoveredContraction {
                states, missing, ..
            } => {
                format!(
                    "{missing} measurement(s) missing among states {:?}",
                    one_based(states)
                )
            }
            Violation::UncoveredParentScc { states, .. } => {
                format!("parent SCC {:?} unmeasured", one_based(states))
            }
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn one_based(states: &[usize]) -> Vec<usize> {
    states.iter().map(|s| s + 1).collect()
}

/// Removes the failed sensor and adds the replacement on the chosen state.
/// The result is re-checked; a failing check is reported as an internal
/// inconsistency rather than returned.
pub fn apply_plan(
    pattern: &SystemPattern,
    plan: &RecoveryPlan,
) -> Result<SystemPattern, RecoveryError> {
    let chosen = check_applicable(plan)?;
    if pattern.sensor(&plan.failed_sensor).is_none() {
        return Err(RecoveryError::UnknownSensor(plan.failed_sensor.clone()));
    }
    let next = substitute(pattern, &plan.failed_sensor, &plan.replacement_id, chosen)?;
    let scope = match (plan.partial, plan.failed_kind) {
        (false, _) => Scope::Full,
        (true, SensorKind::Alpha) => Scope::Matching,
        (true, _) => Scope::Reachability,
    };
    passes(&next, scope).map_err(|v| RecoveryError::Inconsistent {
        id: plan.failed_sensor.clone(),
        detail: describe(&v),
    })?;
    Ok(next)
}

/// Applies every plan of a bundle at once and checks the full condition.
pub fn apply_bundle(
    pattern: &SystemPattern,
    bundle: &RecoveryBundle,
) -> Result<SystemPattern, RecoveryError> {
    let mut failed = None;
    let mut added = Vec::new();
    for plan in bundle.plans() {
        added.push((plan.replacement_id.clone(), check_applicable(plan)?));
        failed = Some(plan.failed_sensor.clone());
    }
    let Some(failed) = failed else {
        return Ok(pattern.clone());
    };
    if pattern.sensor(&failed).is_none() {
        return Err(RecoveryError::UnknownSensor(failed));
    }
    let mut sensors: Vec<Sensor> = pattern
        .sensors()
        .iter()
        .filter(|s| s.id != failed)
        .cloned()
        .collect();
    for (id, state) in added {
        if sensors.iter().any(|s| s.id == id) {
            return Err(RecoveryError::IdCollision(id));
        }
        sensors.push(Sensor::new(id, [state]));
    }
    let next = pattern
        .with_sensors(sensors)
        .expect("replacement states come from the pattern");
    passes(&next, Scope::Full).map_err(|v| RecoveryError::Inconsistent {
        id: failed,
        detail: describe(&v),
    })?;
    Ok(next)
}

//! File formats. Everything here is JSON except the MSE table, which lives
//! in [`crate::sim`].
//!
//! State indices, contraction ids and SCC ids are one-based in every file;
//! the conversion to the crate's zero-based indices happens only here.
//! Matrices are row-major with explicit `rows` and `cols`.

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::analysis::{oriented_view, ContractionSet, SensorKind, StructuralAnalysis, Violation};
use crate::digraph::{Matching, Orientation, PatternError, Sensor, SystemPattern};
use crate::estimator::{GainMatrix, NumericSensor, NumericSystem, DEFAULT_NOISE};
use crate::recovery::{Connectivity, RecoveryBundle, RecoveryPlan};
use crate::sim::{
    EventKind, GainSource, Scenario, ScenarioEvent, SimulationReport, Verdict, DEFAULT_HORIZON,
    DEFAULT_RHO, DEFAULT_SEED, DEFAULT_TRIALS,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IoError {
    /// Malformed JSON, or JSON that does not fit the schema.
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error("{0}")]
    Invalid(String),
}

impl From<serde_json::Error> for IoError {
    fn from(e: serde_json::Error) -> Self {
        let (line, column) = (e.line(), e.column());
        let full = e.to_string();
        let suffix = format!(" at line {line} column {column}");
        let message = full.strip_suffix(&suffix).unwrap_or(&full).to_string();
        IoError::Syntax {
            line,
            column,
            message,
        }
    }
}

fn from_json<T: DeserializeOwned>(text: &str) -> Result<T, IoError> {
    Ok(serde_json::from_str(text)?)
}

/// Pretty JSON with a trailing newline. Arrays holding only scalars stay
/// on one line, so an edge reads as `[1, 2]` and matrix data as one row.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let value = serde_json::to_value(value).expect("report types serialize");
    let mut out = String::new();
    write_value(&value, 0, &mut out);
    out.push('\n');
    out
}

fn write_value(value: &Value, depth: usize, out: &mut String) {
    let pad = |out: &mut String, d: usize| out.push_str(&"  ".repeat(d));
    match value {
        Value::Array(items) if items.iter().all(|x| !x.is_array() && !x.is_object()) => {
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                write_value(item, depth, out);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                pad(out, depth + 1);
                write_value(item, depth + 1, out);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            for (k, (key, item)) in map.iter().enumerate() {
                pad(out, depth + 1);
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                write_value(item, depth + 1, out);
                out.push_str(if k + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push('}');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}

fn zero_based(index: usize, what: impl FnOnce() -> String) -> Result<usize, IoError> {
    index
        .checked_sub(1)
        .ok_or_else(|| IoError::Invalid(format!("{}: indices are 1-based, found 0", what())))
}

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|x| x + 1).collect()
}

// ---------------------------------------------------------------- system

/// Largest state count a system file may declare. Keeps a few bytes of
/// input from demanding gigabytes of per-state storage.
pub const MAX_STATES: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorFile {
    pub id: String,
    pub states: Vec<usize>,
}

/// `{"n": 3, "edges": [[1, 2], [2, 3]], "sensors": [{"id": "a1", "states": [3]}]}`
///
/// An edge `[j, i]` is the link `x_j -> x_i`. Duplicate edges are rejected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub n: usize,
    #[serde(default)]
    pub edges: Vec<[usize; 2]>,
    #[serde(default)]
    pub sensors: Vec<SensorFile>,
}

impl SystemFile {
    pub fn from_pattern(pattern: &SystemPattern) -> Self {
        Self {
            n: pattern.n(),
            edges: pattern
                .edges()
                .iter()
                .map(|&(j, i)| [j + 1, i + 1])
                .collect(),
            sensors: pattern
                .sensors()
                .iter()
                .map(|s| SensorFile {
                    id: s.id.clone(),
                    states: one_based(&s.states),
                })
                .collect(),
        }
    }

    pub fn to_pattern(&self) -> Result<SystemPattern, IoError> {
        if self.n > MAX_STATES {
            return Err(IoError::Invalid(format!(
                "n = {} exceeds the limit of {MAX_STATES} states",
                self.n
            )));
        }
        let edges = self
            .edges
            .iter()
            .map(|&[j, i]| {
                let at = || format!("edge [{j}, {i}]");
                Ok((zero_based(j, at)?, zero_based(i, at)?))
            })
            .collect::<Result<Vec<_>, IoError>>()?;
        let sensors = self
            .sensors
            .iter()
            .map(|s| {
                let states = s
                    .states
                    .iter()
                    .map(|&x| zero_based(x, || format!("sensor {:?}", s.id)))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Sensor::new(s.id.clone(), states))
            })
            .collect::<Result<Vec<_>, IoError>>()?;
        Ok(SystemPattern::new(self.n, edges, sensors)?)
    }
}

pub fn parse_system(text: &str) -> Result<SystemPattern, IoError> {
    from_json::<SystemFile>(text)?.to_pattern()
}

/// Canonical form: pretty-printed, edges in input order, sensor states
/// ascending.
pub fn system_to_json(pattern: &SystemPattern) -> String {
    to_json(&SystemFile::from_pattern(pattern))
}

// ---------------------------------------------------------------- analysis

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub id: usize,
    pub states: Vec<usize>,
    pub witness_unmatched: usize,
    pub unmatched: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SccReport {
    pub id: usize,
    pub states: Vec<usize>,
    pub parent: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequirementReport {
    pub state: usize,
    pub kind: SensorKind,
    pub contraction: Option<usize>,
    pub parent_scc: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleReport {
    pub id: String,
    pub kind: SensorKind,
    pub contractions: Vec<usize>,
    pub parent_sccs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ViolationReport {
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

impl From<&Violation> for ViolationReport {
    fn from(v: &Violation) -> Self {
        match v {
            Violation::UncoveredContraction {
                contraction,
                states,
                missing,
            } => ViolationReport::UncoveredContraction {
                contraction: contraction.map(|c| c + 1),
                states: one_based(states),
                missing: *missing,
            },
            Violation::UncoveredParentScc { scc, states } => ViolationReport::UncoveredParentScc {
                scc: scc + 1,
                states: one_based(states),
            },
        }
    }
}

/// Matching and contractions under a non-default orientation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrientedReport {
    pub orientation: Orientation,
    /// Matched links as `[left, right]`.
    pub matching: Vec<[usize; 2]>,
    pub unmatched: Vec<usize>,
    pub contractions: Vec<ContractionReport>,
}

/// Output of `analyze`, built on the transposed construction. With the
/// paper orientation requested, `view` repeats the matching part under it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub n: usize,
    /// Matched links as `[left, right]`: edge `[j, i]` matched through `j`.
    pub matching: Vec<[usize; 2]>,
    pub unmatched: Vec<usize>,
    pub contractions: Vec<ContractionReport>,
    pub sccs: Vec<SccReport>,
    pub minimal_placement: Vec<RequirementReport>,
    pub classification: Vec<RoleReport>,
    pub violations: Vec<ViolationReport>,
    pub observable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub view: Option<OrientedReport>,
}

fn matching_part(
    matching: &Matching,
    contractions: &[ContractionSet],
) -> (Vec<[usize; 2]>, Vec<usize>, Vec<ContractionReport>) {
    (
        matching
            .pairs()
            .iter()
            .map(|&(l, r)| [l + 1, r + 1])
            .collect(),
        one_based(&matching.unmatched_left()),
        contractions
            .iter()
            .map(|c| ContractionReport {
                id: c.id + 1,
                states: one_based(&c.states),
                witness_unmatched: c.witness_unmatched + 1,
                unmatched: one_based(&c.unmatched),
            })
            .collect(),
    )
}

pub fn analysis_report(pattern: &SystemPattern, orientation: Orientation) -> AnalysisReport {
    let analysis = StructuralAnalysis::new(pattern);
    let classification = analysis.classify(pattern);
    let verdict = analysis.observability(pattern);
    let sccs = &analysis.sccs;
    let (matching, unmatched, contractions) =
        matching_part(&analysis.matching, &analysis.contractions);
    let view = (orientation != Orientation::Transposed).then(|| {
        let view = oriented_view(pattern, orientation);
        let (matching, unmatched, contractions) = matching_part(&view.matching, &view.contractions);
        OrientedReport {
            orientation,
            matching,
            unmatched,
            contractions,
        }
    });
    AnalysisReport {
        n: pattern.n(),
        matching,
        unmatched,
        contractions,
        sccs: (0..sccs.components().len())
            .map(|id| SccReport {
                id: id + 1,
                states: one_based(sccs.component(id)),
                parent: sccs.is_parent(id),
            })
            .collect(),
        minimal_placement: analysis
            .minimal_placement()
            .requirements
            .iter()
            .map(|r| RequirementReport {
                state: r.state + 1,
                kind: r.kind,
                contraction: r.contraction.map(|c| c + 1),
                parent_scc: r.parent_scc.map(|c| c + 1),
            })
            .collect(),
        classification: classification
            .roles
            .iter()
            .map(|r| RoleReport {
                id: r.id.clone(),
                kind: r.kind,
                contractions: one_based(&r.contractions),
                parent_sccs: one_based(&r.parent_sccs),
            })
            .collect(),
        violations: verdict
            .violations
            .iter()
            .map(ViolationReport::from)
            .collect(),
        observable: verdict.observable,
        view,
    }
}

/// Parses a system file and analyses it in one go.
pub fn analyze_text(text: &str, orientation: Orientation) -> Result<AnalysisReport, IoError> {
    Ok(analysis_report(&parse_system(text)?, orientation))
}

// ---------------------------------------------------------------- recovery

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanReport {
    pub failed_sensor: String,
    pub failed_kind: SensorKind,
    pub failed_state: usize,
    /// Candidate replacement states.
    pub equivalent_states: Vec<usize>,
    pub verified_states: Vec<usize>,
    pub chosen_state: Option<usize>,
    pub connectivity: Connectivity,
    pub feasible: bool,
    pub replacement_id: String,
    pub partial: bool,
    pub diagnostic: Option<String>,
}

impl From<&RecoveryPlan> for PlanReport {
    fn from(p: &RecoveryPlan) -> Self {
        Self {
            failed_sensor: p.failed_sensor.clone(),
            failed_kind: p.failed_kind,
            failed_state: p.failed_state + 1,
            equivalent_states: one_based(&p.equivalent_states),
            verified_states: one_based(&p.verified_states),
            chosen_state: p.chosen_state.map(|s| s + 1),
            connectivity: p.connectivity,
            feasible: p.feasible,
            replacement_id: p.replacement_id.clone(),
            partial: p.partial,
            diagnostic: p.diagnostic.clone(),
        }
    }
}

/// Output of `plan-recovery`: one plan per role of the failed sensor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleReport {
    pub sensor: String,
    pub feasible: bool,
    pub alpha: Option<PlanReport>,
    pub beta: Option<PlanReport>,
}

impl BundleReport {
    pub fn new(sensor: &str, bundle: &RecoveryBundle) -> Self {
        Self {
            sensor: sensor.to_string(),
            feasible: bundle.feasible(),
            alpha: bundle.alpha.as_ref().map(PlanReport::from),
            beta: bundle.beta.as_ref().map(PlanReport::from),
        }
    }
}

// ---------------------------------------------------------------- numeric

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub rows: usize,
    pub cols: usize,
    /// Row-major entries.
    pub data: Vec<f64>,
}

impl MatrixFile {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.transpose().iter().copied().collect(),
        }
    }

    pub fn to_matrix(&self, what: &str) -> Result<DMatrix<f64>, IoError> {
        if self.rows.checked_mul(self.cols) != Some(self.data.len()) {
            return Err(IoError::Invalid(format!(
                "{what}: {}x{} matrix needs {} entries, found {}",
                self.rows,
                self.cols,
                self.rows.saturating_mul(self.cols),
                self.data.len()
            )));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericSensorFile {
    pub id: String,
    pub h: MatrixFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericSystemFile {
    pub n: usize,
    pub a: MatrixFile,
    pub sensors: Vec<NumericSensorFile>,
    pub sigma_v: f64,
    pub sigma_r: f64,
}

fn sensor_files(sensors: &[NumericSensor]) -> Vec<NumericSensorFile> {
    sensors
        .iter()
        .map(|s| NumericSensorFile {
            id: s.id.clone(),
            h: MatrixFile::from_matrix(&s.h),
        })
        .collect()
}

impl NumericSystemFile {
    pub fn from_system(system: &NumericSystem) -> Self {
        Self {
            n: system.n(),
            a: MatrixFile::from_matrix(&system.a),
            sensors: sensor_files(&system.sensors),
            sigma_v: system.sigma_v,
            sigma_r: system.sigma_r,
        }
    }

    pub fn to_system(&self) -> Result<NumericSystem, IoError> {
        let a = self.a.to_matrix("a")?;
        if a.shape() != (self.n, self.n) {
            return Err(IoError::Invalid(format!("a must be {0}x{0}", self.n)));
        }
        let sensors = self
            .sensors
            .iter()
            .map(|s| {
                let h = s.h.to_matrix(&format!("sensor {:?}", s.id))?;
                if h.ncols() != self.n {
                    return Err(IoError::Invalid(format!(
                        "sensor {:?}: h must have {} columns",
                        s.id, self.n
                    )));
                }
                Ok(NumericSensor {
                    id: s.id.clone(),
                    h,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if ![self.sigma_v, self.sigma_r].iter().all(|s| *s >= 0.0) {
            return Err(IoError::Invalid("noise levels must be non-negative".into()));
        }
        Ok(NumericSystem {
            a,
            sensors,
            sigma_v: self.sigma_v,
            sigma_r: self.sigma_r,
        })
    }
}

pub fn parse_numeric_system(text: &str) -> Result<NumericSystem, IoError> {
    from_json::<NumericSystemFile>(text)?.to_system()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainFile {
    pub n: usize,
    pub blocks: Vec<MatrixFile>,
}

impl GainFile {
    pub fn from_gain(gain: &GainMatrix) -> Self {
        Self {
            n: gain.blocks.first().map_or(0, |b| b.nrows()),
            blocks: gain.blocks.iter().map(MatrixFile::from_matrix).collect(),
        }
    }

    pub fn to_gain(&self) -> Result<GainMatrix, IoError> {
        let blocks = self
            .blocks
            .iter()
            .enumerate()
            .map(|(k, b)| {
                let m = b.to_matrix(&format!("block {k}"))?;
                if m.shape() != (self.n, self.n) {
                    return Err(IoError::Invalid(format!(
                        "block {k} must be {0}x{0}",
                        self.n
                    )));
                }
                Ok(m)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(GainMatrix { blocks })
    }
}

pub fn parse_gain(text: &str) -> Result<GainMatrix, IoError> {
    from_json::<GainFile>(text)?.to_gain()
}

/// Per-phase numeric data written next to a simulation's CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayPhase {
    pub index: usize,
    pub first_step: usize,
    pub last_step: usize,
    pub sensors: Vec<NumericSensorFile>,
    pub weights: MatrixFile,
    pub gain: GainFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayFile {
    pub system: NumericSystemFile,
    pub phases: Vec<ReplayPhase>,
}

impl ReplayFile {
    pub fn new(report: &SimulationReport) -> Self {
        let phases = report
            .phases
            .iter()
            .map(|p| ReplayPhase {
                index: p.index,
                first_step: p.first_step,
                last_step: p.last_step,
                sensors: p
                    .sensors
                    .iter()
                    .zip(&p.h)
                    .map(|(id, h)| NumericSensorFile {
                        id: id.clone(),
                        h: MatrixFile::from_matrix(h),
                    })
                    .collect(),
                weights: MatrixFile::from_matrix(&p.weights),
                gain: GainFile::from_gain(&p.gain_blocks),
            })
            .collect();
        Self {
            system: NumericSystemFile::from_system(&report.system),
            phases,
        }
    }
}

// ---------------------------------------------------------------- scenario

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventFile {
    pub kind: EventKind,
    pub sensor: String,
    pub step: usize,
}

fn default_rho() -> f64 {
    DEFAULT_RHO
}
fn default_noise() -> f64 {
    DEFAULT_NOISE
}
fn default_horizon() -> usize {
    DEFAULT_HORIZON
}
fn default_trials() -> usize {
    DEFAULT_TRIALS
}
fn default_seed() -> u64 {
    DEFAULT_SEED
}

/// Simulation input. Only `system` is required.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub system: SystemFile,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_noise")]
    pub sigma_v: f64,
    #[serde(default = "default_noise")]
    pub sigma_r: f64,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub events: Vec<EventFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Vec<Verdict>>,
}

impl ScenarioFile {
    pub fn from_scenario(s: &Scenario) -> Self {
        Self {
            system: SystemFile::from_pattern(&s.pattern),
            rho: s.target_rho,
            sigma_v: s.sigma_v,
            sigma_r: s.sigma_r,
            horizon: s.horizon,
            trials: s.trials,
            seed: s.seed,
            events: s
                .events
                .iter()
                .map(|e| EventFile {
                    kind: e.kind,
                    sensor: e.sensor.clone(),
                    step: e.step,
                })
                .collect(),
            expect: s.expect.clone(),
        }
    }

    pub fn to_scenario(&self) -> Result<Scenario, IoError> {
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return Err(IoError::Invalid(format!(
                "rho must be positive, found {}",
                self.rho
            )));
        }
        if ![self.sigma_v, self.sigma_r]
            .iter()
            .all(|s| s.is_finite() && *s >= 0.0)
        {
            return Err(IoError::Invalid("noise levels must be non-negative".into()));
        }
        if self.horizon == 0 || self.trials == 0 {
            return Err(IoError::Invalid(
                "horizon and trials must be at least 1".into(),
            ));
        }
        let mut last = 1;
        for (k, e) in self.events.iter().enumerate() {
            if e.step < last || e.step == 0 || e.step > self.horizon {
                return Err(IoError::Invalid(format!(
                    "event {k}: step {} is out of order or outside 1..={}",
                    e.step, self.horizon
                )));
            }
            last = e.step;
        }
        Ok(Scenario {
            pattern: self.system.to_pattern()?,
            target_rho: self.rho,
            sigma_v: self.sigma_v,
            sigma_r: self.sigma_r,
            horizon: self.horizon,
            trials: self.trials,
            seed: self.seed,
            events: self
                .events
                .iter()
                .map(|e| ScenarioEvent {
                    kind: e.kind,
                    sensor: e.sensor.clone(),
                    step: e.step,
                })
                .collect(),
            expect: self.expect.clone(),
        })
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario, IoError> {
    from_json::<ScenarioFile>(text)?.to_scenario()
}

pub fn scenario_to_json(scenario: &Scenario) -> String {
    to_json(&ScenarioFile::from_scenario(scenario))
}

// ---------------------------------------------------------------- summary

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorSummary {
    pub sensor: String,
    pub verdict: Verdict,
    /// `null` when the first window has zero MSE.
    pub growth_ratio: Option<f64>,
    pub steady_mse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSummary {
    pub index: usize,
    pub first_step: usize,
    pub last_step: usize,
    pub sensors: Vec<String>,
    pub structurally_observable: bool,
    pub distributed_observable: bool,
    pub gain: GainSource,
    pub spectral_radius: f64,
    pub verdict: Verdict,
    pub sensor_verdicts: Vec<SensorSummary>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mismatch {
    pub phase: usize,
    pub expected: Verdict,
    pub actual: Option<Verdict>,
}

/// The deterministic part of a run summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub trials: usize,
    pub horizon: usize,
    pub rho: f64,
    pub sigma_v: f64,
    pub sigma_r: f64,
    pub phases: Vec<PhaseSummary>,
    pub expect: Option<Vec<Verdict>>,
    pub mismatches: Vec<Mismatch>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Runtime {
    pub seconds: f64,
}

/// `summary.json`: `result` is reproducible from the seed, `runtime` is not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub result: RunResult,
    pub runtime: Runtime,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl RunResult {
    pub fn new(scenario: &Scenario, report: &SimulationReport) -> Self {
        let mismatches = scenario
            .expect
            .as_deref()
            .map(|e| report.mismatches(e))
            .unwrap_or_default()
            .into_iter()
            .map(|(phase, expected, actual)| Mismatch {
                phase,
                expected,
                actual,
            })
            .collect();
        Self {
            seed: scenario.seed,
            trials: scenario.trials,
            horizon: scenario.horizon,
            rho: scenario.target_rho,
            sigma_v: scenario.sigma_v,
            sigma_r: scenario.sigma_r,
            phases: report
                .phases
                .iter()
                .map(|p| PhaseSummary {
                    index: p.index,
                    first_step: p.first_step,
                    last_step: p.last_step,
                    sensors: p.sensors.clone(),
                    structurally_observable: p.structurally_observable,
                    distributed_observable: p.distributed_observable,
                    gain: p.gain,
                    spectral_radius: p.spectral_radius,
                    verdict: p.verdict(),
                    sensor_verdicts: p
                        .verdicts
                        .iter()
                        .map(|v| SensorSummary {
                            sensor: v.sensor.clone(),
                            verdict: v.verdict,
                            growth_ratio: finite(v.growth_ratio),
                            steady_mse: finite(v.steady_mse),
                        })
                        .collect(),
                })
                .collect(),
            expect: scenario.expect.clone(),
            mismatches,
        }
    }
}

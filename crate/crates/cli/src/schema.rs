//! File schemas quoted in `--help`. Macros rather than constants so that
//! `concat!` can join them into attribute strings.

macro_rules! system {
    () => {
        r#"SYSTEM FILE (JSON, states numbered from 1)
  {
    "n": 3,                          number of states, >= 1
    "edges": [[1, 2], [2, 3]],       [j, i] is the link x_j -> x_i (a_ij != 0)
    "sensors": [                     optional, default []
      {"id": "y1", "states": [3]}    distinct ids, non-empty distinct states
    ]
  }
  Duplicate edges, unknown fields and index 0 are validation errors."#
    };
}

macro_rules! analysis {
    () => {
        r#"ANALYSIS REPORT (JSON, states and ids numbered from 1)
  {
    "n": 3,
    "matching": [[1, 2], [2, 3]],    matched links [j, i], matched through x_j
    "unmatched": [3],                states left unmatched
    "contractions": [{"id", "states", "witness_unmatched", "unmatched"}],
    "sccs": [{"id", "states", "parent"}],      parent = no outgoing link
    "minimal_placement": [{"state", "kind", "contraction", "parent_scc"}],
    "classification": [{"id", "kind", "contractions", "parent_sccs"}],
                                     kind is "alpha", "beta" or "redundant"
    "violations": [
      {"kind": "uncovered_contraction", "contraction", "states", "missing"},
      {"kind": "uncovered_parent_scc", "scc", "states"}
    ],
    "observable": true,
    "view": {"orientation", "matching", "unmatched", "contractions"}
                                     only with --orientation paper
  }"#
    };
}

macro_rules! classification {
    () => {
        r#"CLASSIFICATION (JSON)
  {
    "observable": true,
    "classification": [{"id", "kind", "contractions", "parent_sccs"}],
    "violations": [...]              as in the analysis report
  }"#
    };
}

macro_rules! plan {
    () => {
        r#"RECOVERY PLAN (JSON, states numbered from 1)
  {
    "sensor": "a1",
    "feasible": true,
    "alpha": PLAN or null,           present when the sensor covered a contraction
    "beta": PLAN or null             present when it covered a parent SCC
  }
  PLAN = {
    "failed_sensor", "failed_kind", "failed_state",
    "equivalent_states": [...],      contraction or parent-SCC siblings
    "verified_states": [...],        siblings that pass the structural check
    "chosen_state": 2 or null,       lowest verified sibling
    "connectivity": "hub" | "strongly_connected",
    "feasible", "replacement_id", "partial", "diagnostic"
  }"#
    };
}

macro_rules! scenario {
    () => {
        r#"SCENARIO FILE (JSON); only "system" is required
  {
    "system": SYSTEM,                as in the system file
    "rho": 1.1,                      spectral radius A is rescaled to
    "sigma_v": 0.25,                 process noise standard deviation
    "sigma_r": 0.25,                 measurement noise standard deviation
    "horizon": 100,                  steps 1..=horizon
    "trials": 100,
    "seed": 20190501,
    "events": [                      ordered by step
      {"kind": "failure", "sensor": "a1", "step": 30},
      {"kind": "recovery", "sensor": "a1", "step": 30}
    ],
    "expect": ["bounded", "divergent"]   optional verdict per phase
  }
  A phase starts at step 1 and at every distinct event step."#
    };
}

macro_rules! outputs {
    () => {
        r#"OUTPUT DIRECTORY
  mse.csv       header step,sensor_id,mse,phase; one row per step and alive
                sensor, mse averaged over trials and states
  summary.json  {"result": {seed, trials, horizon, rho, sigma_v, sigma_r,
                  phases: [{index, first_step, last_step, sensors,
                  structurally_observable, distributed_observable,
                  gain: "designed"|"carried", spectral_radius, verdict,
                  sensor_verdicts: [{sensor, verdict, growth_ratio,
                  steady_mse}]}], expect, mismatches: [{phase, expected,
                  actual}]},
                 "runtime": {"seconds"}}
                Everything except "runtime" is identical for a given seed.
  replay.json   {"system": {n, a, sensors: [{id, h}], sigma_v, sigma_r},
                 "phases": [{index, first_step, last_step, sensors,
                 weights, gain: {n, blocks}}]}
                Matrices are {"rows", "cols", "data"} with data row-major."#
    };
}

macro_rules! exit_codes {
    () => {
        r#"EXIT CODES
  0  success
  1  I/O or numerical failure (for example gain synthesis gave up)
  2  validation error (unreadable file, malformed JSON, bad contents)
  3  infeasibility finding (unobservable system, infeasible recovery)
  4  simulated verdicts differ from the scenario's "expect""#
    };
}

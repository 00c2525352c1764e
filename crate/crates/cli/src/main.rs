#[macro_use]
mod schema;
mod output;

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use obsrec::analysis::{minimal_sensor_placement, StructuralAnalysis};
use obsrec::digraph::{Orientation, SystemPattern};
use obsrec::io::{
    analysis_report, parse_scenario, parse_system, scenario_to_json, system_to_json, to_json,
    BundleReport, IoError, ReplayFile, RoleReport, RunResult, Runtime, Summary, ViolationReport,
};
use obsrec::recovery::{plan_recovery, FailureEvent, RecoveryBundle, RecoveryError};
use obsrec::sim::{
    emit_csv, generate_benchmark_scenario, generate_random_scenario, run, EventKind, Scenario,
    ScenarioEvent, SimError, Verdict, DEFAULT_SEED,
};

#[derive(Parser)]
#[command(
    name = "obsrec",
    version,
    about = "Structural observability, sensor placement and failure recovery for distributed estimation",
    after_help = exit_codes!()
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Matching, contractions, SCCs, classification and verdict of a system.
    #[command(after_long_help = concat!(system!(), "\n\n", analysis!(), "\n\n", exit_codes!()))]
    Analyze {
        /// System file.
        system: PathBuf,
        /// Bipartite construction shown in the report's `view`: paper or
        /// transposed.
        #[arg(long, default_value_t = Orientation::Transposed)]
        orientation: Orientation,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replace the sensors of a system with a minimal placement.
    #[command(after_long_help = concat!(system!(), "\n\n", exit_codes!()))]
    Place {
        /// System file.
        system: PathBuf,
        /// Write the placed system here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify each sensor as alpha, beta or redundant.
    #[command(after_long_help = concat!(system!(), "\n\n", classification!(), "\n\n", exit_codes!()))]
    Classify {
        /// System file.
        system: PathBuf,
        /// Write the classification here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plan the replacement of a failed sensor.
    #[command(name = "plan-recovery", after_long_help = concat!(system!(), "\n\n", plan!(), "\n\n", exit_codes!()))]
    PlanRecovery {
        /// System file, with the failed sensor still listed.
        system: PathBuf,
        /// Id of the failed sensor.
        #[arg(long)]
        sensor: String,
        /// Write the plan here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario and write mse.csv, summary.json and replay.json.
    #[command(after_long_help = concat!(scenario!(), "\n\n", outputs!(), "\n\n", exit_codes!()))]
    Simulate {
        /// Scenario file.
        scenario: PathBuf,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Generate a scenario with a random system and a minimal placement.
    #[command(after_long_help = concat!(scenario!(), "\n\n", system!(), "\n\n", exit_codes!()))]
    Gen {
        /// Number of states of a random system.
        #[arg(
            long,
            required_unless_present = "benchmark",
            conflicts_with = "benchmark"
        )]
        n: Option<usize>,
        /// Probability of each ordered pair (self-loops included) being an edge.
        #[arg(long, default_value_t = 0.3)]
        density: f64,
        /// Ten states, two parent SCCs, one contraction: one alpha and two
        /// beta sensors.
        #[arg(long)]
        benchmark: bool,
        /// Failure event, as SENSOR@STEP. Repeatable.
        #[arg(long, value_parser = parse_event)]
        fail: Vec<(String, usize)>,
        /// Recovery event, as SENSOR@STEP. Repeatable.
        #[arg(long, value_parser = parse_event)]
        recover: Vec<(String, usize)>,
        /// Expected verdict per phase, comma separated.
        #[arg(long, value_delimiter = ',', value_parser = parse_verdict)]
        expect: Option<Vec<Verdict>>,
        /// Only write the system file, without scenario settings.
        #[arg(long)]
        system_only: bool,
        #[command(flatten)]
        run: RunFlags,
        /// Write the scenario here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Overrides for scenario settings.
#[derive(Args)]
struct RunFlags {
    /// Master seed; every random draw derives from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Spectral radius of the instantiated A.
    #[arg(long)]
    rho: Option<f64>,
    /// Standard deviation of both process and measurement noise.
    #[arg(long)]
    noise: Option<f64>,
    /// Monte Carlo trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Number of simulated steps.
    #[arg(long)]
    horizon: Option<usize>,
}

impl RunFlags {
    fn apply(&self, s: &mut Scenario) {
        if let Some(v) = self.seed {
            s.seed = v;
        }
        if let Some(v) = self.rho {
            s.target_rho = v;
        }
        if let Some(v) = self.noise {
            s.sigma_v = v;
            s.sigma_r = v;
        }
        if let Some(v) = self.trials {
            s.trials = v;
        }
        if let Some(v) = self.horizon {
            s.horizon = v;
        }
    }
}

fn parse_event(s: &str) -> Result<(String, usize), String> {
    let (id, step) = s
        .rsplit_once('@')
        .ok_or_else(|| format!("expected SENSOR@STEP, got {s:?}"))?;
    let step = step
        .parse()
        .map_err(|e| format!("bad step in {s:?}: {e}"))?;
    Ok((id.to_string(), step))
}

fn parse_verdict(s: &str) -> Result<Verdict, String> {
    match s {
        "bounded" => Ok(Verdict::Bounded),
        "divergent" => Ok(Verdict::Divergent),
        other => Err(format!(
            "unknown verdict {other:?} (expected bounded or divergent)"
        )),
    }
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Display) -> Self {
        Self {
            code,
            message: message.to_string(),
        }
    }
}

const VALIDATION: u8 = 2;
const INFEASIBLE: u8 = 3;
const MISMATCH: u8 = 4;
const RUNTIME: u8 = 1;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::new(VALIDATION, format!("{}: {e}", path.display())))
}

fn invalid(path: &Path, e: IoError) -> Failure {
    Failure::new(VALIDATION, format!("{}: {e}", path.display()))
}

fn load_system(path: &Path) -> Result<SystemPattern, Failure> {
    parse_system(&read(path)?).map_err(|e| invalid(path, e))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => output::write_file(path, text)
            .map_err(|e| Failure::new(RUNTIME, format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct Classification {
    observable: bool,
    classification: Vec<RoleReport>,
    violations: Vec<ViolationReport>,
}

fn analyze(system: &Path, orientation: Orientation, out: Option<&Path>) -> Result<u8, Failure> {
    let pattern = load_system(system)?;
    let report = analysis_report(&pattern, orientation);
    emit(out, &to_json(&report))?;
    Ok(if report.observable { 0 } else { INFEASIBLE })
}

fn place(system: &Path, out: Option<&Path>) -> Result<u8, Failure> {
    let pattern = load_system(system)?;
    let placed = pattern
        .with_sensors(minimal_sensor_placement(&pattern).to_sensors())
        .expect("placement sensors are valid");
    emit(out, &system_to_json(&placed))?;
    Ok(0)
}

fn classify(system: &Path, out: Option<&Path>) -> Result<u8, Failure> {
    let pattern = load_system(system)?;
    let report = analysis_report(&pattern, Orientation::Transposed);
    let c = Classification {
        observable: report.observable,
        classification: report.classification,
        violations: report.violations,
    };
    emit(out, &to_json(&c))?;
    Ok(if c.observable { 0 } else { INFEASIBLE })
}

fn plan(system: &Path, sensor: &str, out: Option<&Path>) -> Result<u8, Failure> {
    let pattern = load_system(system)?;
    if !StructuralAnalysis::new(&pattern)
        .observability(&pattern)
        .observable
    {
        return Err(Failure::new(
            INFEASIBLE,
            "the system is not structurally observable before the failure; run analyze",
        ));
    }
    let bundle = match plan_recovery(&pattern, &FailureEvent::new(sensor, 0)) {
        Ok(b) => b,
        Err(RecoveryError::Redundant(_)) => {
            eprintln!("sensor {sensor:?} is redundant; no replacement is needed");
            RecoveryBundle {
                alpha: None,
                beta: None,
            }
        }
        Err(e) => return Err(Failure::new(VALIDATION, e)),
    };
    let report = BundleReport::new(sensor, &bundle);
    emit(out, &to_json(&report))?;
    for p in bundle.plans().filter(|p| !p.feasible) {
        if let Some(d) = &p.diagnostic {
            eprintln!("{sensor}: {d}");
        }
    }
    Ok(if report.feasible { 0 } else { INFEASIBLE })
}

fn sim_failure(e: SimError) -> Failure {
    let code = match &e {
        SimError::InfeasibleRecovery { .. } => INFEASIBLE,
        SimError::Estimator { .. } => RUNTIME,
        _ => VALIDATION,
    };
    Failure::new(code, e)
}

fn simulate(path: &Path, out: &Path, flags: &RunFlags) -> Result<u8, Failure> {
    let mut scenario = parse_scenario(&read(path)?).map_err(|e| invalid(path, e))?;
    flags.apply(&mut scenario);
    let started = Instant::now();
    let report = run(&scenario).map_err(sim_failure)?;
    let result = RunResult::new(&scenario, &report);
    let summary = Summary {
        runtime: Runtime {
            seconds: started.elapsed().as_secs_f64(),
        },
        result,
    };

    let io_err = |e: std::io::Error| Failure::new(RUNTIME, format!("{}: {e}", out.display()));
    let mut set = output::OutputSet::new(out).map_err(io_err)?;
    set.add("mse.csv", &emit_csv(&report)).map_err(io_err)?;
    set.add("summary.json", &to_json(&summary))
        .map_err(io_err)?;
    set.add("replay.json", &to_json(&ReplayFile::new(&report)))
        .map_err(io_err)?;
    set.commit().map_err(io_err)?;

    for p in &summary.result.phases {
        println!(
            "phase {} steps {}..={} sensors [{}] rho {:.4} {:?} -> {}",
            p.index,
            p.first_step,
            p.last_step,
            p.sensors.join(", "),
            p.spectral_radius,
            p.gain,
            match p.verdict {
                Verdict::Bounded => "bounded",
                Verdict::Divergent => "divergent",
            }
        );
    }
    let mismatches = &summary.result.mismatches;
    if mismatches.is_empty() {
        return Ok(0);
    }
    for m in mismatches {
        eprintln!(
            "phase {}: expected {:?}, got {}",
            m.phase,
            m.expected,
            m.actual
                .map_or("no such phase".to_string(), |v| format!("{v:?}"))
        );
    }
    Ok(MISMATCH)
}

#[allow(clippy::too_many_arguments)]
fn generate(
    n: Option<usize>,
    density: f64,
    fail: &[(String, usize)],
    recover: &[(String, usize)],
    expect: Option<Vec<Verdict>>,
    system_only: bool,
    flags: &RunFlags,
    out: Option<&Path>,
) -> Result<u8, Failure> {
    let seed = flags.seed.unwrap_or(DEFAULT_SEED);
    let mut scenario = match n {
        Some(n) => {
            if n == 0 {
                return Err(Failure::new(VALIDATION, "--n must be at least 1"));
            }
            if !(density > 0.0 && density <= 1.0) {
                return Err(Failure::new(VALIDATION, "--density must be in (0, 1]"));
            }
            generate_random_scenario(n, density, seed)
        }
        None => generate_benchmark_scenario(seed),
    };
    flags.apply(&mut scenario);
    let mut events: Vec<ScenarioEvent> = fail
        .iter()
        .map(|(s, k)| (EventKind::Failure, s, *k))
        .chain(recover.iter().map(|(s, k)| (EventKind::Recovery, s, *k)))
        .map(|(kind, sensor, step)| ScenarioEvent {
            kind,
            sensor: sensor.clone(),
            step,
        })
        .collect();
    // Stable sort keeps a failure ahead of a recovery at the same step.
    events.sort_by_key(|e| e.step);
    scenario.events = events;
    scenario.expect = expect;
    let text = if system_only {
        system_to_json(&scenario.pattern)
    } else {
        let text = scenario_to_json(&scenario);
        // Anything gen writes must load back.
        parse_scenario(&text).map_err(|e| Failure::new(VALIDATION, e))?;
        text
    };
    emit(out, &text)?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Analyze {
            system,
            orientation,
            out,
        } => analyze(system, *orientation, out.as_deref()),
        Command::Place { system, out } => place(system, out.as_deref()),
        Command::Classify { system, out } => classify(system, out.as_deref()),
        Command::PlanRecovery {
            system,
            sensor,
            out,
        } => plan(system, sensor, out.as_deref()),
        Command::Simulate { scenario, out, run } => simulate(scenario, out, run),
        Command::Gen {
            n,
            density,
            benchmark: _,
            fail,
            recover,
            expect,
            system_only,
            run,
            out,
        } => generate(
            *n,
            *density,
            fail,
            recover,
            expect.clone(),
            *system_only,
            run,
            out.as_deref(),
        ),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

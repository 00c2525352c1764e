//! End-to-end runs of the `obsrec` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn obsrec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_obsrec"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const CHAIN: &str =
    r#"{"n": 3, "edges": [[1, 2], [2, 3]], "sensors": [{"id": "y", "states": [3]}]}"#;
const IN_STAR: &str = r#"{"n": 3, "edges": [[1, 3], [2, 3]], "sensors": [{"id": "s3", "states": [3]}, {"id": "s1", "states": [1]}]}"#;
const SELF_CYCLE: &str = r#"{"n": 3, "edges": [[1, 2], [2, 1], [2, 3], [3, 3]], "sensors": [{"id": "b1", "states": [3]}]}"#;

#[test]
fn every_subcommand_documents_its_schemas() {
    for (cmd, needles) in [
        (
            "analyze",
            &[
                "SYSTEM FILE",
                "ANALYSIS REPORT",
                "EXIT CODES",
                "--orientation",
            ][..],
        ),
        ("place", &["SYSTEM FILE", "EXIT CODES"]),
        ("classify", &["SYSTEM FILE", "CLASSIFICATION"]),
        (
            "plan-recovery",
            &["SYSTEM FILE", "RECOVERY PLAN", "strongly_connected"],
        ),
        (
            "simulate",
            &[
                "SCENARIO FILE",
                "step,sensor_id,mse,phase",
                "runtime",
                "--seed",
                "--noise",
                "--trials",
                "--horizon",
                "--rho",
                "--out",
            ],
        ),
        ("gen", &["SCENARIO FILE", "--benchmark", "--seed"]),
    ] {
        let o = obsrec(&[cmd, "--help"]);
        assert_eq!(code(&o), 0);
        let text = String::from_utf8_lossy(&o.stdout);
        for n in needles {
            assert!(text.contains(n), "{cmd} --help lacks {n}");
        }
    }
}

#[test]
fn analyze_reports_and_sets_exit_codes() {
    let dir = TempDir::new().unwrap();
    let ok = write(&dir, "chain.json", CHAIN);
    let o = obsrec(&["analyze", &ok]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&o);
    assert_eq!(r["observable"], true);
    assert_eq!(r["unmatched"], serde_json::json!([3]));
    assert!(r.get("view").is_none());

    let o = obsrec(&["analyze", &ok, "--orientation", "paper"]);
    assert_eq!(json(&o)["view"]["unmatched"], serde_json::json!([1]));

    let bare = write(&dir, "bare.json", r#"{"n": 3, "edges": [[1, 2], [2, 3]]}"#);
    let o = obsrec(&["analyze", &bare]);
    assert_eq!(code(&o), 3);
    assert_eq!(json(&o)["violations"][0]["kind"], "uncovered_contraction");

    let out = dir.path().join("report.json");
    let o = obsrec(&["analyze", &ok, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let saved: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(saved["observable"], true);
}

#[test]
fn validation_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let broken = write(
        &dir,
        "broken.json",
        "{\n  \"n\": 3,\n  \"edges\": [[1, 2],\n}",
    );
    let o = obsrec(&["analyze", &broken]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 4, column"), "{}", stderr(&o));

    let dup = write(&dir, "dup.json", r#"{"n": 2, "edges": [[1, 2], [1, 2]]}"#);
    assert_eq!(code(&obsrec(&["analyze", &dup])), 2);
    assert_eq!(code(&obsrec(&["analyze", "/nonexistent/system.json"])), 2);
    assert_eq!(code(&obsrec(&["classify", &dup])), 2);
    let o = obsrec(&["analyze", &broken, "--orientation", "sideways"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn place_output_is_observable() {
    let dir = TempDir::new().unwrap();
    let bare = write(
        &dir,
        "bare.json",
        r#"{"n": 4, "edges": [[1, 2], [2, 1], [3, 4], [4, 4]]}"#,
    );
    let placed = dir.path().join("placed.json");
    let o = obsrec(&["place", &bare, "--out", placed.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let o = obsrec(&["analyze", placed.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = obsrec(&["classify", placed.to_str().unwrap()]);
    let c = json(&o);
    assert!(c["classification"]
        .as_array()
        .unwrap()
        .iter()
        .all(|r| r["kind"] != "redundant"));
}

#[test]
fn plan_recovery_exit_codes() {
    let dir = TempDir::new().unwrap();
    let star = write(&dir, "star.json", IN_STAR);
    let o = obsrec(&["plan-recovery", &star, "--sensor", "s1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let p = json(&o);
    assert_eq!(p["alpha"]["chosen_state"], 2);
    assert_eq!(p["alpha"]["connectivity"], "hub");

    let o = obsrec(&["plan-recovery", &star, "--sensor", "s3"]);
    assert_eq!(code(&o), 3);
    assert_eq!(json(&o)["feasible"], false);

    let cyc = write(&dir, "cycle.json", SELF_CYCLE);
    let o = obsrec(&["plan-recovery", &cyc, "--sensor", "b1"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("self-cycle"), "{}", stderr(&o));

    assert_eq!(
        code(&obsrec(&["plan-recovery", &star, "--sensor", "nope"])),
        2
    );
}

fn run_sim(scenario: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["simulate", scenario, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    obsrec(&args)
}

#[test]
fn simulate_is_reproducible_except_runtime() {
    let dir = TempDir::new().unwrap();
    let sc = dir.path().join("sc.json");
    let o = obsrec(&[
        "gen",
        "--benchmark",
        "--seed",
        "5",
        "--trials",
        "20",
        "--horizon",
        "40",
        "--out",
        sc.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let sc = sc.to_str().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&run_sim(sc, &a, &[])), 0);
    assert_eq!(code(&run_sim(sc, &b, &[])), 0);
    for f in ["mse.csv", "replay.json"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let sa: Value = serde_json::from_slice(&fs::read(a.join("summary.json")).unwrap()).unwrap();
    let sb: Value = serde_json::from_slice(&fs::read(b.join("summary.json")).unwrap()).unwrap();
    assert_eq!(sa["result"], sb["result"]);
    assert!(sa["runtime"]["seconds"].is_number());
    assert_eq!(sa.as_object().unwrap().len(), 2);

    let csv = fs::read_to_string(a.join("mse.csv")).unwrap();
    assert!(csv.starts_with("step,sensor_id,mse,phase\n"));
    assert_eq!(csv.lines().count(), 1 + 40 * 3);
    assert_eq!(sa["result"]["phases"][0]["verdict"], "bounded");

    let c = dir.path().join("c");
    assert_eq!(code(&run_sim(sc, &c, &["--seed", "6"])), 0);
    assert_ne!(
        fs::read(a.join("mse.csv")).unwrap(),
        fs::read(c.join("mse.csv")).unwrap()
    );
}

#[test]
fn simulate_expectation_mismatch_exits_4() {
    let dir = TempDir::new().unwrap();
    let sc = dir.path().join("sc.json");
    obsrec(&[
        "gen",
        "--benchmark",
        "--seed",
        "1",
        "--trials",
        "10",
        "--horizon",
        "30",
        "--expect",
        "divergent",
        "--out",
        sc.to_str().unwrap(),
    ]);
    let out = dir.path().join("o");
    let o = run_sim(sc.to_str().unwrap(), &out, &[]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert!(stderr(&o).contains("expected Divergent"));
    // The outputs are still complete.
    assert!(out.join("summary.json").exists());
    let s: Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(s["result"]["mismatches"][0]["phase"], 0);
}

#[test]
fn simulate_refuses_infeasible_recovery_without_leaving_files() {
    let dir = TempDir::new().unwrap();
    let text = format!(
        r#"{{"system": {SELF_CYCLE}, "trials": 5, "horizon": 20,
            "events": [{{"kind": "failure", "sensor": "b1", "step": 10}},
                       {{"kind": "recovery", "sensor": "b1", "step": 10}}]}}"#
    );
    let sc = write(&dir, "sc.json", &text);
    let out = dir.path().join("out");
    let o = run_sim(&sc, &out, &[]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("self-cycle"), "{}", stderr(&o));
    assert!(!out.exists());

    // A pre-existing directory is left as it was.
    fs::create_dir(&out).unwrap();
    let o = run_sim(&sc, &out, &[]);
    assert_eq!(code(&o), 3);
    assert_eq!(fs::read_dir(&out).unwrap().count(), 0);
}

#[test]
fn simulate_validation_errors() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let bad = write(&dir, "bad.json", r#"{"system": {"n": 1}, "trials": 0}"#);
    assert_eq!(code(&run_sim(&bad, &out, &[])), 2);
    let unknown = write(
        &dir,
        "unknown.json",
        r#"{"system": {"n": 1, "edges": [[1, 1]], "sensors": [{"id": "a", "states": [1]}]},
            "events": [{"kind": "failure", "sensor": "zzz", "step": 3}]}"#,
    );
    let o = run_sim(&unknown, &out, &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("zzz"));
    let ok = write(
        &dir,
        "ok.json",
        r#"{"system": {"n": 1, "edges": [[1, 1]], "sensors": [{"id": "a", "states": [1]}]}}"#,
    );
    assert_eq!(code(&run_sim(&ok, &out, &["--trials", "0"])), 2);
    assert!(!out.exists());
}

#[test]
fn gen_modes() {
    let o = obsrec(&["gen", "--n", "6", "--density", "0.3", "--seed", "9"]);
    assert_eq!(code(&o), 0);
    let a = json(&o);
    assert_eq!(a["system"]["n"], 6);
    assert_eq!(a["seed"], 9);
    assert_eq!(
        o.stdout,
        obsrec(&["gen", "--n", "6", "--density", "0.3", "--seed", "9"]).stdout
    );

    let o = obsrec(&["gen", "--benchmark", "--system-only", "--seed", "2"]);
    let s = json(&o);
    assert_eq!(s["n"], 10);
    assert_eq!(s["sensors"].as_array().unwrap().len(), 3);

    assert_eq!(code(&obsrec(&["gen", "--n", "4", "--density", "0"])), 2);
    assert_eq!(code(&obsrec(&["gen"])), 2);
    let o = obsrec(&[
        "gen",
        "--benchmark",
        "--fail",
        "a1@5",
        "--recover",
        "a1@5",
        "--expect",
        "bounded,bounded",
    ]);
    let sc = json(&o);
    assert_eq!(sc["events"][0]["kind"], "failure");
    assert_eq!(sc["events"][1]["kind"], "recovery");
}

//! End-to-end tests of the binary: determinism, file round-trips, the
//! exit-code contract, and corruption detection through the log replay.

use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_hardball");

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run_with(envs: &[(&str, &str)], args: &[&str]) -> Run {
    let mut cmd = Command::new(BIN);
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    Run {
        code: out.status.code().expect("no signal"),
        stdout: String::from_utf8(out.stdout).expect("utf8 stdout"),
        stderr: String::from_utf8(out.stderr).expect("utf8 stderr"),
    }
}

fn run(args: &[&str]) -> Run {
    run_with(&[], args)
}

/// Fresh per-test scratch directory under the system temp dir.
fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hardball-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).expect("scratch dir");
    dir
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

fn parse(text: &str) -> Value {
    serde_json::from_str(text).expect("valid JSON")
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let dir = scratch("determinism");
    let a = dir.join("a");
    let b = dir.join("b");
    for out in [&a, &b] {
        let r = run(&[
            "simulate",
            "--scenario",
            "line-of-balls",
            "--n",
            "4",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(r.code, 0, "stderr: {}", r.stderr);
    }
    assert_eq!(read(&a.join("events.jsonl")), read(&b.join("events.jsonl")));
    assert_eq!(read(&a.join("summary.json")), read(&b.join("summary.json")));

    let summary = parse(&read(&a.join("summary.json")));
    assert_eq!(summary["collisions"], 6);
    assert_eq!(summary["termination"], "terminal");
}

#[test]
fn two_ball_log_has_exactly_one_event_line() {
    let dir = scratch("two-ball");
    let r = run(&[
        "simulate",
        "--scenario",
        "line-of-balls",
        "--n",
        "2",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 0);
    let log = read(&dir.join("events.jsonl"));
    let lines: Vec<&str> = log.lines().collect();
    assert_eq!(lines.len(), 2, "header plus one event:\n{log}");
    assert!(lines[0].contains("\"kind\":\"hardball-events\""));
    assert!(lines[1].contains("\"pair\":[0,1]"));
}

#[test]
fn search_witness_round_trips_through_simulate() {
    let dir = scratch("round-trip");
    let r = run(&[
        "search", "--n", "3", "--d", "2", "--trials", "90", "--seed", "3", "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 0, "stderr: {}", r.stderr);
    let search = parse(&read(&dir.join("search.json")));
    let count = search["count"].as_u64().expect("count");
    assert!(count >= 1);

    let witness = dir.join("witness.json");
    let r = run(&["simulate", "--scenario", witness.to_str().unwrap()]);
    assert_eq!(r.code, 0, "stderr: {}", r.stderr);
    let summary = parse(&r.stdout);
    assert_eq!(summary["collisions"].as_u64().unwrap(), count);
}

#[test]
fn verify_passes_on_clean_scenarios_and_logs() {
    let dir = scratch("verify-clean");
    let r = run(&[
        "simulate",
        "--scenario",
        "line-of-balls",
        "--n",
        "3",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 0);

    let log = dir.join("events.jsonl");
    let r = run(&["verify", "--scenario", log.to_str().unwrap(), "--samples", "20", "--cuts", "3"]);
    assert_eq!(r.code, 0, "stderr: {}", r.stderr);
    let report = parse(&r.stdout);
    assert_eq!(report["pass"], true);
    assert_eq!(report["claims"].as_object().unwrap().len(), 9);
}

#[test]
fn corrupted_log_fails_with_f_monotone_flagged() {
    let dir = scratch("corrupt");
    let r = run(&[
        "simulate",
        "--scenario",
        "line-of-balls",
        "--n",
        "3",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 0);

    // Negate one ball's post-collision velocity in the last event. The
    // chosen ball has a clearly negative component, so some axis total
    // jumps upward, which the partial-sum claim must flag.
    let log_path = dir.join("events.jsonl");
    let log = read(&log_path);
    let mut lines: Vec<String> = log.lines().map(String::from).collect();
    let last = lines.last().expect("events present").clone();
    let mut event: Value = serde_json::from_str(&last).unwrap();
    let posts = event["post_velocities"].as_array().unwrap().clone();
    let min_component = |v: &Value| {
        v.as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap())
            .fold(f64::INFINITY, f64::min)
    };
    let ball = if min_component(&posts[0]) <= min_component(&posts[1]) { 0 } else { 1 };
    assert!(
        min_component(&posts[ball]) < -1e-3,
        "test scenario must give a negative component"
    );
    let negated: Vec<Value> = posts[ball]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| Value::from(-x.as_f64().unwrap()))
        .collect();
    event["post_velocities"][ball] = Value::from(negated);
    *lines.last_mut().unwrap() = serde_json::to_string(&event).unwrap();
    let corrupted = dir.join("corrupted.jsonl");
    std::fs::write(&corrupted, lines.join("\n") + "\n").unwrap();

    let r = run(&["verify", "--scenario", corrupted.to_str().unwrap(), "--samples", "20", "--cuts", "3"]);
    assert_eq!(r.code, 1, "stdout: {} stderr: {}", r.stdout, r.stderr);
    let report = parse(&r.stdout);
    assert_eq!(report["pass"], false);
    assert_eq!(report["claims"]["F_monotone"]["pass"], false, "report: {}", r.stdout);
}

#[test]
fn unknown_schema_is_rejected() {
    let dir = scratch("schema");
    let r = run(&[
        "simulate",
        "--scenario",
        "line-of-balls",
        "--n",
        "2",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 0);

    let log = read(&dir.join("events.jsonl"));
    let bumped = log.replacen("\"schema\":1", "\"schema\":9", 1);
    let path = dir.join("future.jsonl");
    std::fs::write(&path, bumped).unwrap();

    let r = run(&["verify", "--scenario", path.to_str().unwrap()]);
    assert_eq!(r.code, 2, "stderr: {}", r.stderr);
    assert!(r.stderr.contains("schema"), "stderr: {}", r.stderr);
}

#[test]
fn verify_report_is_independent_of_thread_count() {
    let args = [
        "verify", "--scenario", "random", "--n", "3", "--d", "2", "--seed", "9", "--instances",
        "3", "--samples", "12", "--cuts", "3",
    ];
    let one = run_with(&[("HARDBALL_THREADS", "1")], &args);
    let four = run_with(&[("HARDBALL_THREADS", "4")], &args);
    assert_eq!(one.code, 0, "stderr: {}", one.stderr);
    assert_eq!(four.code, 0, "stderr: {}", four.stderr);
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn bounds_table_rows_and_values() {
    let r = run(&["bounds", "--n-range", "3..6", "--delta", "1.0"]);
    assert_eq!(r.code, 0);
    let lines: Vec<&str> = r.stdout.lines().collect();
    assert_eq!(lines.len(), 5, "header plus four rows:\n{}", r.stdout);
    assert!(lines[0].starts_with("n,delta,rho,"));

    let row3: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(row3[0], "3");
    let phi_delta: f64 = row3[5].parse().unwrap();
    assert!((phi_delta - 8.0551655887009606).abs() < 1e-9);
    let cubic: f64 = row3[7].parse().unwrap();
    assert_eq!(cubic, 1.0);

    let r = run(&["bounds", "--n-range", "x..y"]);
    assert_eq!(r.code, 1);
    let r = run(&["bounds", "--n-range", "10..3"]);
    assert_eq!(r.code, 1);
}

#[test]
fn cluster_report_satisfies_its_own_postconditions() {
    let r = run(&["cluster", "--scenario", "line-of-balls", "--n", "4", "--rho", "0.2"]);
    assert_eq!(r.code, 0, "stderr: {}", r.stderr);
    let report = parse(&r.stdout);
    assert_eq!(report["connected"], true);
    assert_eq!(report["floor_satisfied"], true);
    assert_eq!(report["total_collisions"], 6);
    assert!(report["balls"].as_array().unwrap().len() >= 2);
}

#[test]
fn unknown_generator_is_degenerate_input() {
    let r = run(&["simulate", "--scenario", "no-such-generator"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("unknown scenario"));
}

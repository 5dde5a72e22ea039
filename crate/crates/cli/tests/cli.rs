use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn chronos(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chronos")).args(args).current_dir(dir).output().unwrap()
}

fn two_five(dir: &Path) {
    fs::write(
        dir.join("tasks.json"),
        r#"{"tasks":[{"id":1,"period":2,"wcet":0,"deadline":2,"releases":100},
                     {"id":2,"period":5,"wcet":0,"deadline":5,"releases":100}]}"#,
    )
    .unwrap();
    fs::write(dir.join("map.json"), r#"{"timers":[{"id":1,"period":2,"tasks":[1]},{"id":2,"period":5,"tasks":[2]}]}"#)
        .unwrap();
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn simulate_two_five_baseline_and_chronos() {
    let dir = tempfile::tempdir().unwrap();
    two_five(dir.path());
    let out = chronos(&["simulate", "--tasks", "tasks.json", "--mapping", "map.json", "--strategy", "baseline"], dir.path());
    assert!(out.status.success());
    let m = json(&out);
    assert_eq!(m["total_interrupts"], 10);
    assert_eq!(m["not_required_interrupts"], 4);

    let out = chronos(
        &["simulate", "--tasks", "tasks.json", "--mapping", "map.json", "--strategy", "chronos", "--trace", "t.csv"],
        dir.path(),
    );
    assert!(out.status.success());
    let m = json(&out);
    assert_eq!(m["total_interrupts"], 7);
    assert_eq!(m["not_required_interrupts"], 0);
    let trace = fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let releases: Vec<&str> = trace
        .lines()
        .filter(|l| l.contains(",release,") && !l.starts_with("0,"))
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(releases, ["2", "4", "5", "6", "8", "10", "10"]);
}

#[test]
fn optimize_accepts_result_as_mapping() {
    let dir = tempfile::tempdir().unwrap();
    two_five(dir.path());
    let out = chronos(&["optimize", "--tasks", "tasks.json", "--timers", "2", "--out", "opt.json", "--export-lp", "m.lp"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let opt: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("opt.json")).unwrap()).unwrap();
    assert_eq!(opt["objective"], serde_json::json!({"num": 7, "den": 10}));
    assert!(fs::read_to_string(dir.path().join("m.lp")).unwrap().contains("Minimize"));
    let out = chronos(&["simulate", "--tasks", "tasks.json", "--mapping", "opt.json", "--format", "csv"], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("chronos,10,7,7,0"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    two_five(dir.path());
    // Missing input.
    assert_eq!(chronos(&["simulate", "--tasks", "missing.json"], dir.path()).status.code(), Some(2));
    fs::write(dir.path().join("bad.json"), "{").unwrap();
    assert_eq!(chronos(&["optimize", "--tasks", "bad.json"], dir.path()).status.code(), Some(2));
    // Harmonic routine on a non-harmonic group.
    let single = r#"{"timers":[{"id":1,"period":1,"tasks":[1,2]}]}"#;
    fs::write(dir.path().join("single.json"), single).unwrap();
    let out = chronos(
        &["simulate", "--tasks", "tasks.json", "--mapping", "single.json", "--strategy", "chronos-harmonic"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("timer 1 periods [2, 5]"));
    // Greedy fallback when the exact bound is too small.
    let out = chronos(&["optimize", "--preset", "low", "--exact-bound", "2"], dir.path());
    assert_eq!(out.status.code(), Some(5));
    assert_eq!(json(&out)["method"], "greedy");
    assert_eq!(chronos(&["sweep", "--preset", "medium"], dir.path()).status.code(), Some(2));
}

#[test]
fn generate_preset_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = chronos(&["generate", "--preset", "low"], dir.path());
    assert!(out.status.success());
    assert_eq!(json(&out)["tasks"].as_array().unwrap().len(), 100);
    assert!(String::from_utf8_lossy(&out.stderr).contains("harmonic chain: no"));
    let out = chronos(&["generate", "--preset", "harmonic-single"], dir.path());
    assert!(String::from_utf8_lossy(&out.stderr).contains("harmonic chain: yes"));
    fs::write(dir.path().join("spec.json"), r#"{"base_periods":[3],"factors":[1],"n_tasks":0}"#).unwrap();
    assert_eq!(chronos(&["generate", "--spec", "spec.json"], dir.path()).status.code(), Some(2));
}

#[test]
fn pipeline_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let run = |tag: &str| {
        let tasks = format!("tasks-{tag}.json");
        let opt = format!("opt-{tag}.json");
        let sweep = format!("sweep-{tag}.csv");
        assert!(chronos(&["generate", "--preset", "high", "--seed", "11", "--out", &tasks], d).status.success());
        assert!(chronos(&["optimize", "--tasks", &tasks, "--out", &opt], d).status.success());
        let out = chronos(&["sweep", "--preset", "high", "--seed", "11", "--period-factor", "1-3", "--out", &sweep], d);
        assert!(out.status.success());
        [tasks, opt, sweep].map(|f| fs::read(d.join(f)).unwrap())
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn sweep_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = chronos(&["sweep", "--preset", "low", "--period-factor", "2", "--out", "s.csv"], d);
    assert!(out.status.success());
    let csv = fs::read_to_string(d.join("s.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let summary = String::from_utf8(out.stdout).unwrap();
    let report = chronos(&["report", "s.csv"], d);
    assert_eq!(String::from_utf8(report.stdout).unwrap(), summary);
    let report = chronos(&["report", "s.csv", "--format", "json"], d);
    assert_eq!(serde_json::from_slice::<serde_json::Value>(&report.stdout).unwrap().as_array().unwrap().len(), 2);
}

#[test]
fn sweep_reports_failed_rows_inline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = chronos(&["sweep", "--preset", "low", "--period-factor", "1", "--strategy", "baseline,chronos-harmonic"], d);
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.lines().nth(2).unwrap().contains("chronos-harmonic needs harmonic"));
    let out = chronos(&["sweep", "--preset", "low", "--period-factor", "1", "--strategy", "chronos-harmonic"], d);
    assert_eq!(out.status.code(), Some(3));
}

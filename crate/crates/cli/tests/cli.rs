use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn emsq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emsq"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn base_case(dir: &Path) -> Vec<String> {
    [
        "--t-call",
        "15",
        "--t-service",
        "50",
        "--out-dir",
        dir.to_str().unwrap(),
    ]
    .map(String::from)
    .to_vec()
}

fn run(base: &[String], extra: &[&str]) -> Output {
    let mut args: Vec<&str> = extra.to_vec();
    args.extend(base.iter().map(String::as_str));
    emsq(&args)
}

#[test]
fn analyze_writes_report_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&base_case(dir.path()), &["analyze", "--servers", "6"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("report.json"));
    let r = &report[0];
    assert_eq!(r["servers"], 6);
    assert!((r["p_occup"].as_f64().unwrap() - 0.14822).abs() < 1e-4);
    assert!((r["mean_wait"].as_f64().unwrap() - 18.75).abs() < 1e-9);
    let table = fs::read_to_string(dir.path().join("metrics_by_fleet.csv")).unwrap();
    assert!(table.starts_with("servers,rho,p_occup,p_busy,los,one_minus_los,"));
    assert_eq!(table.lines().count(), 2);
    assert!(!dir.path().join("stationary_M6.csv").exists());
}

#[test]
fn unstable_fleet_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&base_case(dir.path()), &["analyze", "--servers", "3,6"]);
    assert_eq!(code(&out), 3);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("M = 3") && err.contains("M = 4"), "{err}");
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let base = base_case(dir.path());
    assert_eq!(code(&run(&base, &["analyze"])), 2);
    assert_eq!(code(&run(&base, &["analyze", "--servers", "0"])), 2);
    assert_eq!(code(&run(&base, &["analyze", "--servers", "six"])), 2);
    assert_eq!(
        code(&emsq(&[
            "analyze",
            "--t-call",
            "-1",
            "--t-service",
            "50",
            "--servers",
            "6"
        ])),
        2
    );
    assert_eq!(code(&run(&base, &["simulate", "--servers", "5,6"])), 2);
    assert_eq!(
        code(&run(&base, &["simulate", "--servers", "6", "--strict"])),
        2
    );

    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"t_call_min": 15, "t_service_min": 50, "servers": 6, "colour": 1}"#,
    )
    .unwrap();
    let out = emsq(&[
        "analyze",
        "--config",
        bad.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn command_line_overrides_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("scenario.json");
    fs::write(
        &file,
        r#"{"t_call_min": 10, "t_service_min": 50, "servers": [6, 7], "t_los_min": 20,
            "sweep": {"t_call_grid": [14, 16]}}"#,
    )
    .unwrap();
    let d = dir.path().to_str().unwrap();
    let f = file.to_str().unwrap();

    let out = emsq(&[
        "analyze",
        "--config",
        f,
        "--t-call",
        "15",
        "--servers",
        "6",
        "--out-dir",
        d,
    ]);
    assert_eq!(code(&out), 0);
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report.as_array().unwrap().len(), 1);
    assert_eq!(report[0]["t_los"], 20.0);
    assert!((report[0]["rho"].as_f64().unwrap() - 50.0 / 90.0).abs() < 1e-12);

    let out = emsq(&["mfpt", "--config", f, "--out-dir", d]);
    assert_eq!(code(&out), 0);
    let sweep = fs::read_to_string(dir.path().join("mfpt_sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 1 + 2 * 2);
    assert!(sweep.contains("16,6,481.964"));
}

#[test]
fn mfpt_profile_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = emsq(&[
        "mfpt",
        "--t-service",
        "50",
        "--servers",
        "6",
        "--t-call-grid",
        "16",
        "--out-dir",
        d,
    ]);
    assert_eq!(code(&out), 0);
    let profile = json(&dir.path().join("mfpt.json"));
    let times = profile[0]["times"].as_array().unwrap();
    assert_eq!(times.len(), 7);
    assert!((times[0].as_f64().unwrap() - 586.33231106048).abs() < 1e-8);
    assert!((profile[0]["mean_time"].as_f64().unwrap() - 481.9642450856228).abs() < 1e-9);
    assert_eq!(
        fs::read_to_string(dir.path().join("mfpt_sweep.csv")).unwrap(),
        "t_call_min,servers,mean_time_to_critical_min\n16,6,481.964\n"
    );
}

#[test]
fn hours_changes_display_only() {
    let dir = tempfile::tempdir().unwrap();
    let base = base_case(dir.path());
    let minutes = run(&base, &["analyze", "--servers", "6"]);
    let table = fs::read(dir.path().join("metrics_by_fleet.csv")).unwrap();
    let hours = run(&base, &["analyze", "--servers", "6", "--hours"]);
    assert_eq!(
        fs::read(dir.path().join("metrics_by_fleet.csv")).unwrap(),
        table
    );
    assert!(String::from_utf8_lossy(&minutes.stdout).contains("18.75 min"));
    assert!(String::from_utf8_lossy(&hours.stdout).contains("0.3125 h"));
}

#[test]
fn sizing_outcomes() {
    let dir = tempfile::tempdir().unwrap();
    let base = base_case(dir.path());
    let out = run(&base, &["size", "--occup-max", "0.15"]);
    assert_eq!(code(&out), 0);
    let s = json(&dir.path().join("sizing.json"));
    assert_eq!(s["m"], 6);
    assert_eq!(s["scanned_range"], serde_json::json!([4, 6]));
    assert_eq!(s["query"]["kind"], "occup_ceiling");

    let out = run(&base, &["size", "--stability"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&dir.path().join("sizing.json"))["m"], 4);

    let out = run(&base, &["size", "--los-min", "0.999999", "--m-max", "7"]);
    assert_eq!(code(&out), 4);
    let s = json(&dir.path().join("sizing.json"));
    assert!(s["m"].is_null());
    assert_eq!(s["best_m"], 7);

    assert_eq!(code(&run(&base, &["size"])), 2);
    assert_eq!(code(&run(&base, &["size", "--occup-max", "1.5"])), 2);
}

#[test]
fn simulate_echoes_config_and_compares() {
    let dir = tempfile::tempdir().unwrap();
    let base = base_case(dir.path());
    let out = run(
        &base,
        &[
            "simulate",
            "--servers",
            "6",
            "--seed",
            "5",
            "--horizon",
            "2e5",
            "--replications",
            "2",
            "--compare",
            "--wait-samples",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&dir.path().join("sim.json"));
    assert_eq!(doc["config"]["seed"], 5);
    assert_eq!(doc["config"]["replications"], 2);
    assert!(doc["config"].get("threads").is_none());
    assert!(doc["estimates"]["p_occup"].is_f64());
    assert!(doc["std_errors"]["p_occup"].as_f64().unwrap() > 0.0);
    assert!((doc["analytic"]["wait_mean_conditional"].as_f64().unwrap() - 18.75).abs() < 1e-12);
    assert_eq!(doc["unstable"], false);
    let waits = fs::read_to_string(dir.path().join("waits.csv")).unwrap();
    assert!(waits.starts_with("call_index,wait_min\n0,"));
}

#[test]
fn simulate_without_seed_echoes_the_drawn_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &base_case(dir.path()),
        &["simulate", "--servers", "6", "--horizon", "5e4"],
    );
    assert_eq!(code(&out), 0);
    assert!(json(&dir.path().join("sim.json"))["config"]["seed"].is_u64());
}

#[test]
fn simulate_unstable_needs_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    let base = base_case(dir.path());
    assert_eq!(
        code(&run(&base, &["simulate", "--servers", "3", "--seed", "1"])),
        3
    );
    let out = run(
        &base,
        &[
            "simulate",
            "--servers",
            "3",
            "--seed",
            "1",
            "--horizon",
            "1e5",
            "--allow-unstable",
        ],
    );
    assert_eq!(code(&out), 0);
    let doc = json(&dir.path().join("sim.json"));
    assert_eq!(doc["unstable"], true);
    assert!(doc["estimates"]["queue_growth_per_min"].as_f64().unwrap() > 0.0);
}

#[test]
fn hitting_mode_reports_every_start() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = emsq(&[
        "simulate",
        "--mode",
        "hitting",
        "--t-call",
        "16",
        "--t-service",
        "50",
        "--servers",
        "2",
        "--seed",
        "3",
        "--replications",
        "500",
        "--out-dir",
        d,
    ]);
    assert_eq!(code(&out), 0);
    let doc = json(&dir.path().join("sim.json"));
    let est = doc["estimates"].as_object().unwrap();
    assert_eq!(est.len(), 4);
    assert!(est.contains_key("time_to_critical_from_2"));
    assert_eq!(doc["n_samples"]["time_to_critical_from_0"], 500);
    assert_eq!(doc["n_samples"]["mean_time_to_critical"], 3 * 500);
}

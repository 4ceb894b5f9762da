//! End-to-end tests of the binary: exit-code contract, JSON schema,
//! strategy override round trip, and sweep CSV shape.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kelly-slc"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn validate_exit_codes() {
    let ok = run(&["validate", data("mixed_reward.json").to_str().unwrap()]);
    assert_eq!(code(&ok), 0);
    assert!(stdout(&ok).contains("valid scenario"));

    let invalid = run(&["validate", data("invalid_reward.json").to_str().unwrap()]);
    assert_eq!(code(&invalid), 2);
    let err = String::from_utf8(invalid.stderr).unwrap();
    assert!(err.contains("diagonal"), "report should name the violation: {err}");

    let dir = std::env::temp_dir().join("kelly-slc-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let broken = dir.join("broken.json");
    std::fs::write(&broken, "{not json").unwrap();
    assert_eq!(code(&run(&["validate", broken.to_str().unwrap()])), 3);

    assert_eq!(code(&run(&["validate", "/nonexistent/file.json"])), 3);
}

#[test]
fn analyze_proportional_case() {
    let out = run(&["analyze", data("mixed_reward.json").to_str().unwrap(), "--json"]);
    assert_eq!(code(&out), 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["verdict"], "proportional_optimal");
    let s = doc["strategy"].as_array().unwrap();
    let expect = [[0.5, 0.5], [0.0, 1.0]];
    for y in 0..2 {
        for i in 0..2 {
            let v = s[y][i].as_f64().unwrap();
            assert!((v - expect[y][i]).abs() < 1e-6, "strategy[{y}][{i}] = {v}");
        }
    }
    assert!((doc["c"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    let decomp = &doc["decomposition"];
    assert_eq!(decomp["exists"], true);
    assert!((decomp["d_diag"][0].as_f64().unwrap() - 2.5).abs() < 1e-9);
    assert!((decomp["d_diag"][1].as_f64().unwrap() - 5.0).abs() < 1e-9);
}

#[test]
fn analyze_nonproportional_and_dominant() {
    let out = run(&["analyze", data("bsc_nonprop.json").to_str().unwrap(), "--json"]);
    assert_eq!(code(&out), 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["verdict"], "non_proportional_optimal");
    assert!((doc["c"].as_f64().unwrap() - 0.5).abs() < 1e-6);

    let out = run(&["analyze", data("dominant.json").to_str().unwrap(), "--json"]);
    assert_eq!(code(&out), 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["verdict"], "trivial_rate_zero");
    assert_eq!(doc["decomposition"]["exists"], false);
    assert_eq!(doc["decomposition"]["dominant_wager"], 0);
}

#[test]
fn analyze_undetermined_exits_4_with_diagnostics() {
    let out = run(&["analyze", data("undetermined3.json").to_str().unwrap()]);
    assert_eq!(code(&out), 4);
    let text = stdout(&out);
    assert!(text.contains("undetermined"));
    assert!(text.contains("lambda_pi"), "diagnostics still printed: {text}");
}

#[test]
fn analyze_twelve_significant_digits() {
    let out = run(&["analyze", data("mixed_reward.json").to_str().unwrap()]);
    let text = stdout(&out);
    let lambda_line = text.lines().find(|l| l.starts_with("lambda:")).unwrap();
    // Scientific notation with 11 fractional digits = 12 significant.
    let mantissa = lambda_line.split_whitespace().nth(1).unwrap();
    let frac = mantissa.split('.').nth(1).unwrap().split('e').next().unwrap();
    assert_eq!(frac.len(), 11, "line {lambda_line}");
}

#[test]
fn simulate_matches_analytics_and_respects_seed() {
    let file = data("mixed_reward.json");
    let args = ["simulate", file.to_str().unwrap(), "--races", "200000", "--seed", "9", "--json"];
    let out = run(&args);
    assert_eq!(code(&out), 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let emp = doc["empirical_lambda"].as_f64().unwrap();
    let ana = doc["analytic_lambda"].as_f64().unwrap();
    let se = doc["standard_error"].as_f64().unwrap();
    assert!((emp - ana).abs() < 3.0 * se);
    // Same seed reproduces bit-identically.
    let out2 = run(&args);
    assert_eq!(stdout(&out), stdout(&out2));
}

#[test]
fn simulate_ruin_exits_5() {
    let out = run(&[
        "simulate",
        data("fair_odds_bsc01.json").to_str().unwrap(),
        "--races",
        "1000",
        "--seed",
        "1",
        "--strategy",
        data("ruin_strategy.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 5);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("ruin at race"), "{err}");
}

#[test]
fn analyze_output_round_trips_as_strategy_override() {
    let file = data("bsc_nonprop.json");
    let analyzed = run(&["analyze", file.to_str().unwrap(), "--json"]);
    assert_eq!(code(&analyzed), 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&analyzed)).unwrap();
    let lambda_analyze = doc["lambda"].as_f64().unwrap();

    let dir = std::env::temp_dir().join("kelly-slc-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let saved = dir.join("analyze_out.json");
    std::fs::write(&saved, stdout(&analyzed)).unwrap();

    let sim = run(&[
        "simulate",
        file.to_str().unwrap(),
        "--races",
        "100",
        "--seed",
        "2",
        "--strategy",
        saved.to_str().unwrap(),
        "--json",
    ]);
    assert_eq!(code(&sim), 0);
    let sim_doc: serde_json::Value = serde_json::from_str(&stdout(&sim)).unwrap();
    // Bit-identical analytic growth after the JSON round trip.
    assert_eq!(sim_doc["analytic_lambda"].as_f64().unwrap(), lambda_analyze);
}

#[test]
fn simulate_writes_trajectory_csv() {
    let dir = std::env::temp_dir().join("kelly-slc-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let traj = dir.join("trajectory.csv");
    let out = run(&[
        "simulate",
        data("mixed_reward.json").to_str().unwrap(),
        "--races",
        "500",
        "--seed",
        "3",
        "--trajectory",
        traj.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&traj).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("race_index,log_wealth_bits"));
    assert_eq!(lines.count(), 500);
}

fn sweep_rows(file: &str, family: &str, start: &str, stop: &str, step: &str) -> Vec<Vec<String>> {
    let out = run(&[
        "sweep",
        data(file).to_str().unwrap(),
        "--family",
        family,
        "--start",
        start,
        "--stop",
        stop,
        "--step",
        step,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8(out.stderr.clone()).unwrap());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "parameter,verdict,c,lambda,lambda_pi,lambda_nsi,delta_bar,gamma_bar,mutual_information"
    );
    lines.map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn sweep_verdict_boundary() {
    let rows = sweep_rows("mixed_reward.json", "bsc", "0.05", "0.5", "0.05");
    assert_eq!(rows.len(), 10);
    for row in &rows {
        let q: f64 = row[0].parse().unwrap();
        let expect = if q >= 0.4 { "proportional_optimal" } else { "no_single_letter_code" };
        assert_eq!(row[1], expect, "q = {q}");
    }
}

#[test]
fn sweep_fair_odds_growth_column() {
    let rows = sweep_rows("fair_odds_bsc01.json", "bsc", "0.05", "0.45", "0.05");
    for row in &rows {
        let q: f64 = row[0].parse().unwrap();
        let lambda: f64 = row[3].parse().unwrap();
        let h2 = -q * q.log2() - (1.0 - q) * (1.0 - q).log2();
        assert!((lambda - (1.0 - h2)).abs() < 1e-9, "q = {q}: lambda {lambda}");
    }
}

#[test]
fn sweep_z_channel_all_rejected() {
    let rows = sweep_rows("mixed_reward.json", "z", "0.1", "0.9", "0.1");
    assert_eq!(rows.len(), 9);
    for row in &rows {
        assert_eq!(row[1], "no_single_letter_code", "q = {}", row[0]);
        assert!(row[2].is_empty(), "no exponent column for rejections");
    }
}

#[test]
fn sweep_invalid_spec_exits_2() {
    let out = run(&[
        "sweep",
        data("mixed_reward.json").to_str().unwrap(),
        "--family",
        "bsc",
        "--start",
        "0.5",
        "--stop",
        "0.1",
        "--step",
        "0.05",
    ]);
    assert_eq!(code(&out), 2);
}

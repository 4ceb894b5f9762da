//! Command-line front end: scenario validation, single-letter optimality
//! analysis, seeded simulation, and parameter sweeps.
//!
//! Exit codes are a stable contract: 0 ok, 2 invalid scenario, 3 parse
//! error, 4 undetermined verdict, 5 ruin during simulation.

mod scenario;

use clap::{Parser, Subcommand, ValueEnum};
use kelly_slc_core::{decomposition, infotheory, optimality, simulate, strategy};
use kelly_slc_core::{Scenario, StrategyMatrix};
use optimality::Verdict;
use scenario::ScenarioFile;
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_INVALID: u8 = 2;
const EXIT_PARSE: u8 = 3;
const EXIT_UNDETERMINED: u8 = 4;
const EXIT_RUIN: u8 = 5;

#[derive(Parser)]
#[command(name = "kelly-slc", version, about = "Kelly betting with noisy side information")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a scenario file and print the aggregated report.
    Validate { file: PathBuf },
    /// Classify the scenario and report growth and information quantities.
    Analyze {
        file: PathBuf,
        /// Emit a machine-readable JSON document instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Monte Carlo simulation under the analyzed (or overridden) strategy.
    Simulate {
        file: PathBuf,
        /// Number of races; overrides the scenario file's simulation block.
        #[arg(long)]
        races: Option<u64>,
        /// RNG seed; overrides the scenario file's simulation block.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the per-race log2 wealth trajectory as CSV.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        /// Strategy override: a JSON matrix or saved analyze output.
        #[arg(long)]
        strategy: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Sweep a channel family parameter and emit one CSV row per value.
    Sweep {
        file: PathBuf,
        /// Channel family generating the swept channel.
        #[arg(long)]
        family: Family,
        #[arg(long)]
        start: f64,
        #[arg(long)]
        stop: f64,
        #[arg(long)]
        step: f64,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    /// Binary symmetric channel with crossover q.
    Bsc,
    /// Z channel: output 0 is noiseless, input 1 flips with probability q.
    Z,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Validate { file } => cmd_validate(&file),
        Command::Analyze { file, json } => cmd_analyze(&file, json),
        Command::Simulate { file, races, seed, trajectory, strategy, json } => {
            cmd_simulate(&file, races, seed, trajectory.as_deref(), strategy.as_deref(), json)
        }
        Command::Sweep { file, family, start, stop, step, output } => {
            cmd_sweep(&file, family, start, stop, step, output.as_deref())
        }
    };
    ExitCode::from(code)
}

/// Read and parse, mapping IO/syntax problems to exit 3 and semantic
/// validation problems to exit 2.
fn load(path: &std::path::Path) -> Result<(Scenario, Option<scenario::SimulationSpec>), u8> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return Err(EXIT_PARSE);
        }
    };
    let file = match ScenarioFile::from_json(&text) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("parse error: {e}");
            return Err(EXIT_PARSE);
        }
    };
    match file.build() {
        Ok(pair) => Ok(pair),
        Err(report) => {
            eprintln!("invalid scenario:\n{report}");
            Err(EXIT_INVALID)
        }
    }
}

fn cmd_validate(path: &std::path::Path) -> u8 {
    match load(path) {
        Ok((scenario, _)) => {
            println!("valid scenario: K = {}", scenario.k());
            EXIT_OK
        }
        Err(code) => code,
    }
}

/// Twelve significant digits, scientific notation.
fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() { json!(x) } else { Value::Null }
}

fn strategy_rows(s: &StrategyMatrix) -> Value {
    json!(s.rows())
}

struct Analysis {
    verdict: Verdict,
    lambda: Option<f64>,
    lambda_pi: f64,
    lambda_nsi: f64,
    delta_bar: Option<f64>,
    gamma_bar: f64,
    mutual_information: f64,
    capacity: f64,
    at_capacity: bool,
}

fn analyze(scenario: &Scenario) -> Result<Analysis, String> {
    let verdict = optimality::classify_scenario(scenario);
    let lambda = verdict.strategy().map(|s| strategy::growth_rate(scenario, s));
    let lambda_pi = strategy::pi_growth(scenario);
    let lambda_nsi = strategy::nsi_growth(scenario).map_err(|e| e.to_string())?;
    let gamma_bar = infotheory::expected_cost(scenario).map_err(|e| e.to_string())?;
    let delta_bar = lambda.map(|l| lambda_pi - l - gamma_bar);
    let mutual_information =
        infotheory::mutual_information(scenario.prior(), scenario.channel());
    let (capacity, _) =
        infotheory::channel_capacity(scenario.channel(), infotheory::CAPACITY_DEFAULT_TOL)
            .map_err(|e| e.to_string())?;
    Ok(Analysis {
        verdict,
        lambda,
        lambda_pi,
        lambda_nsi,
        delta_bar,
        gamma_bar,
        mutual_information,
        capacity,
        at_capacity: (capacity - mutual_information).abs() <= 1e-9,
    })
}

fn decomposition_json(scenario: &Scenario) -> Value {
    match decomposition::decompose(scenario.reward()) {
        Ok(d) => json!({
            "exists": true,
            "q": d.q(),
            "d_diag": d.d_diag(),
            "b": (0..d.k()).map(|i| {
                (0..d.k()).map(|j| d.b()[(i, j)]).collect::<Vec<f64>>()
            }).collect::<Vec<_>>(),
        }),
        Err(e) => json!({
            "exists": false,
            "dominant_wager": decomposition::find_dominant_wager(scenario.reward())
                .map(|w| w.horse),
            "reason": e.to_string(),
        }),
    }
}

fn cmd_analyze(path: &std::path::Path, as_json: bool) -> u8 {
    let (scenario, _) = match load(path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let a = match analyze(&scenario) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("analysis failed: {e}");
            return EXIT_INVALID;
        }
    };
    let witness = a.verdict.witness();
    if as_json {
        let doc = json!({
            "schema": 1,
            "verdict": a.verdict.name(),
            "strategy": a.verdict.strategy().map(strategy_rows),
            "c": witness.map(|w| w.c),
            "d0": witness.map(|w| {
                w.d0.iter().cloned().map(finite_or_null).collect::<Vec<_>>()
            }),
            "degenerate_witness": witness.map(|w| w.degenerate),
            "lambda": a.lambda,
            "lambda_pi": a.lambda_pi,
            "lambda_nsi": a.lambda_nsi,
            "delta_bar": a.delta_bar,
            "gamma_bar": a.gamma_bar,
            "mutual_information": a.mutual_information,
            "capacity": a.capacity,
            "at_capacity": a.at_capacity,
            "decomposition": decomposition_json(&scenario),
            "diagnostic": match &a.verdict {
                Verdict::NoSingleLetterCode { diagnostic, .. } => json!(diagnostic),
                Verdict::Undetermined { reason } => json!(reason),
                Verdict::TrivialRateZero { wager, .. } => json!(format!(
                    "dominant wager on horse {}", wager.horse
                )),
                _ => Value::Null,
            },
        });
        println!("{}", serde_json::to_string_pretty(&doc).expect("valid json"));
    } else {
        println!("verdict: {}", a.verdict.name());
        if let Some(s) = a.verdict.strategy() {
            println!("strategy:");
            for row in s.rows() {
                println!("  [{}]", row.iter().map(|v| sig12(*v)).collect::<Vec<_>>().join(", "));
            }
        }
        if let Some(w) = witness {
            println!("c: {}", sig12(w.c));
            println!(
                "d0: [{}]",
                w.d0.iter().map(|v| sig12(*v)).collect::<Vec<_>>().join(", ")
            );
        }
        match &a.verdict {
            Verdict::NoSingleLetterCode { diagnostic, .. } => println!("diagnostic: {diagnostic}"),
            Verdict::Undetermined { reason } => println!("diagnostic: {reason}"),
            Verdict::TrivialRateZero { wager, .. } => {
                println!("diagnostic: dominant wager on horse {}", wager.horse)
            }
            _ => {}
        }
        if let Some(l) = a.lambda {
            println!("lambda: {}", sig12(l));
        }
        println!("lambda_pi: {}", sig12(a.lambda_pi));
        println!("lambda_nsi: {}", sig12(a.lambda_nsi));
        if let Some(d) = a.delta_bar {
            println!("delta_bar: {}", sig12(d));
        }
        println!("gamma_bar: {}", sig12(a.gamma_bar));
        println!("mutual_information: {}", sig12(a.mutual_information));
        println!("capacity: {}", sig12(a.capacity));
        println!("at_capacity: {}", a.at_capacity);
    }
    if matches!(a.verdict, Verdict::Undetermined { .. }) {
        EXIT_UNDETERMINED
    } else {
        EXIT_OK
    }
}

fn cmd_simulate(
    path: &std::path::Path,
    races: Option<u64>,
    seed: Option<u64>,
    trajectory: Option<&std::path::Path>,
    strategy_path: Option<&std::path::Path>,
    as_json: bool,
) -> u8 {
    let (scenario, sim_spec) = match load(path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let s = match strategy_path {
        Some(sp) => {
            let text = match std::fs::read_to_string(sp) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", sp.display());
                    return EXIT_PARSE;
                }
            };
            let rows = match scenario::parse_strategy_override(&text) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("parse error: {e}");
                    return EXIT_PARSE;
                }
            };
            match StrategyMatrix::new(rows) {
                Ok(s) if s.k() == scenario.k() => s,
                Ok(_) => {
                    eprintln!("invalid strategy override: dimension mismatch");
                    return EXIT_INVALID;
                }
                Err(e) => {
                    eprintln!("invalid strategy override:\n{e}");
                    return EXIT_INVALID;
                }
            }
        }
        None => {
            let verdict = optimality::classify_scenario(&scenario);
            match verdict.strategy() {
                Some(s) => s.clone(),
                None => {
                    eprintln!("undetermined verdict; supply --strategy to simulate");
                    return EXIT_UNDETERMINED;
                }
            }
        }
    };
    let n_races = races.or(sim_spec.as_ref().map(|s| s.n_races)).unwrap_or(100_000);
    let seed = seed.or(sim_spec.as_ref().map(|s| s.seed)).unwrap_or(0);
    let mut cfg = simulate::SimConfig::new(n_races, seed);
    if trajectory.is_some() {
        cfg = cfg.with_trajectory();
    }
    let result = match simulate::run_races(&scenario, &s, &cfg) {
        Ok(r) => r,
        Err(simulate::SimError::RuinEncountered { race }) => {
            eprintln!("ruin at race {race}: the strategy returned zero wealth");
            return EXIT_RUIN;
        }
        Err(e) => {
            eprintln!("simulation failed: {e}");
            return EXIT_INVALID;
        }
    };
    let analytic_lambda = strategy::growth_rate(&scenario, &s);
    let analytic_gamma = match infotheory::expected_cost(&scenario) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("simulation failed: {e}");
            return EXIT_INVALID;
        }
    };
    let analytic_delta = strategy::pi_growth(&scenario) - analytic_lambda - analytic_gamma;
    if let (Some(tp), Some(traj)) = (trajectory, result.trajectory.as_ref()) {
        let mut buf = Vec::new();
        if let Err(e) = simulate::write_trajectory_csv(&mut buf, traj) {
            eprintln!("error: cannot format trajectory: {e}");
            return EXIT_INVALID;
        }
        if let Err(e) = std::fs::write(tp, buf) {
            eprintln!("error: cannot write {}: {e}", tp.display());
            return EXIT_INVALID;
        }
    }
    if as_json {
        let doc = json!({
            "schema": 1,
            "n_races": n_races,
            "seed": seed,
            "empirical_lambda": result.empirical_lambda,
            "empirical_delta": result.empirical_delta,
            "empirical_gamma": result.empirical_gamma,
            "analytic_lambda": analytic_lambda,
            "analytic_delta": analytic_delta,
            "analytic_gamma": analytic_gamma,
            "standard_error": result.standard_error,
            "final_log_wealth": result.final_log_wealth,
        });
        println!("{}", serde_json::to_string_pretty(&doc).expect("valid json"));
    } else {
        println!("races: {n_races}  seed: {seed}");
        println!("quantity      empirical            analytic");
        println!("lambda        {}  {}", sig12(result.empirical_lambda), sig12(analytic_lambda));
        println!("delta_bar     {}  {}", sig12(result.empirical_delta), sig12(analytic_delta));
        println!("gamma_bar     {}  {}", sig12(result.empirical_gamma), sig12(analytic_gamma));
        println!("standard_error: {}", sig12(result.standard_error));
        println!("final_log_wealth: {}", sig12(result.final_log_wealth));
    }
    EXIT_OK
}

pub const SWEEP_HEADER: &str =
    "parameter,verdict,c,lambda,lambda_pi,lambda_nsi,delta_bar,gamma_bar,mutual_information";

fn cmd_sweep(
    path: &std::path::Path,
    family: Family,
    start: f64,
    stop: f64,
    step: f64,
    output: Option<&std::path::Path>,
) -> u8 {
    if !(start <= stop) || !(step > 0.0) {
        eprintln!("invalid sweep spec: require start <= stop and step > 0");
        return EXIT_INVALID;
    }
    let (base, _) = match load(path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    if base.k() != 2 {
        eprintln!("invalid sweep spec: channel families bsc and z are 2x2");
        return EXIT_INVALID;
    }
    let n_steps = ((stop - start) / step).round() as usize;
    let mut rows = vec![SWEEP_HEADER.to_string()];
    for i in 0..=n_steps {
        // Round away accumulated floating noise in the grid value.
        let q = ((start + i as f64 * step) * 1e12).round() / 1e12;
        if q > stop + step * 1e-9 {
            break;
        }
        let channel = match family {
            Family::Bsc => kelly_slc_core::Channel::bsc(q),
            Family::Z => kelly_slc_core::Channel::z(q),
        };
        let scenario = base.with_channel(channel);
        let a = match analyze(&scenario) {
            Ok(a) => a,
            Err(e) => {
                eprintln!("analysis failed at {q}: {e}");
                return EXIT_INVALID;
            }
        };
        let c = a.verdict.witness().map(|w| w.c.to_string()).unwrap_or_default();
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        rows.push(format!(
            "{q},{},{c},{},{},{},{},{},{}",
            a.verdict.name(),
            opt(a.lambda),
            a.lambda_pi,
            a.lambda_nsi,
            opt(a.delta_bar),
            a.gamma_bar,
            a.mutual_information,
        ));
    }
    let text = rows.join("\n") + "\n";
    match output {
        Some(p) => {
            if let Err(e) = std::fs::write(p, text) {
                eprintln!("error: cannot write {}: {e}", p.display());
                return EXIT_INVALID;
            }
        }
        None => print!("{text}"),
    }
    EXIT_OK
}

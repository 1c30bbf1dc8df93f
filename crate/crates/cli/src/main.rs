//! `tailsitter`: run canned or file-based scenarios, recompute reports from
//! telemetry and list the built-in scenarios.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use tailsitter::report::{check_assertions, compute_report, AssertionResult, RunReport};
use tailsitter::scenario::{canned_scenario, parse_scenario, ScenarioConfig, CANNED};
use tailsitter::sim::{simulate_scenario, SimError};
use tailsitter::telemetry::TelemetryLog;

#[derive(Parser)]
#[command(name = "tailsitter", version, about = "Tilt-rotor tailsitter scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and check its assertions.
    Run {
        /// Canned scenario name or path to a scenario file.
        scenario: String,
        /// Directory for telemetry CSV and key=value report.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the scenario seed (the first seed of a sweep).
        #[arg(long)]
        seed: Option<u64>,
        /// `key=value` override, applied in order after the file.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        /// Runs N consecutive seeds in parallel.
        #[arg(long, value_name = "N")]
        sweep: Option<u64>,
    },
    /// Recompute the report from a telemetry CSV.
    Report {
        csv: PathBuf,
        /// Print machine-readable key=value lines instead of the summary.
        #[arg(long)]
        kv: bool,
    },
    /// List the built-in scenarios.
    ListScenarios,
}

struct Outcome {
    report: RunReport,
    checks: Vec<AssertionResult>,
}

impl Outcome {
    fn passed(&self) -> bool {
        self.report.diverged.is_none() && self.checks.iter().all(|c| c.passed)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenario,
            out,
            seed,
            sets,
            sweep,
        } => run(&scenario, out.as_deref(), seed, &sets, sweep),
        Command::Report { csv, kv } => report(&csv, kv),
        Command::ListScenarios => {
            for (name, text) in CANNED {
                let summary: Vec<&str> = text
                    .lines()
                    .take_while(|l| l.starts_with('#'))
                    .map(|l| l.trim_start_matches('#').trim())
                    .collect();
                println!("{name:<18} {}", summary.join(" "));
            }
            Ok(true)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load(scenario: &str, seed: Option<u64>, sets: &[String]) -> Result<ScenarioConfig, String> {
    let mut config = match canned_scenario(scenario) {
        Some(parsed) => parsed.map_err(|e| format!("{scenario}: {e}"))?,
        None => parse_scenario(Path::new(scenario)).map_err(|e| e.to_string())?,
    };
    if let Some(seed) = seed {
        config.seed = seed;
    }
    for kv in sets {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| format!("--set expects key=value, got `{kv}`"))?;
        config.set(key, value).map_err(|e| e.to_string())?;
    }
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}

fn execute(config: &ScenarioConfig, out: Option<&Path>, stem: &str) -> Result<Outcome, String> {
    let log = match simulate_scenario(config) {
        Ok(log) => log,
        Err(SimError::NumericalDivergence { log, .. }) => *log,
        Err(e) => return Err(e.to_string()),
    };
    let report = compute_report(&log);
    let checks = check_assertions(&config.active_assertions(), &report, &log);
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        write(&dir.join(format!("{stem}.csv")), &log.to_csv_string())?;
        write(&dir.join(format!("{stem}.report")), &report.to_key_values())?;
    }
    Ok(Outcome { report, checks })
}

fn write(path: &Path, text: &str) -> Result<(), String> {
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn print_checks(checks: &[AssertionResult]) {
    for c in checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
}

fn run(
    scenario: &str,
    out: Option<&Path>,
    seed: Option<u64>,
    sets: &[String],
    sweep: Option<u64>,
) -> Result<bool, String> {
    let config = load(scenario, seed, sets)?;
    let Some(count) = sweep else {
        let outcome = execute(&config, out, &config.name)?;
        print!("{}", outcome.report.to_text());
        print_checks(&outcome.checks);
        return Ok(outcome.passed());
    };
    if count == 0 {
        return Err("--sweep needs at least one run".to_string());
    }
    let outcomes: Vec<Result<Outcome, String>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut c = config.clone();
            c.seed = config.seed + i;
            execute(&c, out, &format!("{}_seed{}", c.name, c.seed))
        })
        .collect();
    let mut all_passed = true;
    let mut gates = Vec::new();
    for outcome in outcomes {
        let outcome = outcome?;
        let r = &outcome.report;
        let gate = r.gate_time.map_or("none".to_string(), |t| format!("{t:.3} s"));
        let failed: Vec<&str> = outcome
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        let status = if failed.is_empty() {
            "PASS".to_string()
        } else {
            format!("FAIL ({})", failed.join(", "))
        };
        println!("seed {:>4}: gate {gate:>9}, end {:.2} s, {status}", r.seed, r.end_time);
        all_passed &= outcome.passed();
        gates.extend(r.gate_time);
    }
    if gates.is_empty() {
        println!("gate crossing: no run reached the gate");
    } else {
        let min = gates.iter().copied().fold(f64::INFINITY, f64::min);
        let max = gates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = gates.iter().sum::<f64>() / gates.len() as f64;
        println!(
            "gate crossing over {}/{count} runs: min {min:.3} s, mean {mean:.3} s, max {max:.3} s, spread {:.3} s",
            gates.len(),
            max - min
        );
    }
    Ok(all_passed)
}

fn report(csv: &Path, kv: bool) -> Result<bool, String> {
    let log = TelemetryLog::read_path(csv).map_err(|e| format!("{}: {e}", csv.display()))?;
    let report = compute_report(&log);
    if kv {
        print!("{}", report.to_key_values());
    } else {
        print!("{}", report.to_text());
    }
    Ok(true)
}

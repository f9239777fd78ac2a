use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use serde_json::{json, Map, Value};

use hri_core::bus::EventLog;
use hri_core::conformance;
use hri_core::kinematics::{emit_urdf, KinematicModel};
use hri_core::pipeline::{self, PipelineError};
use hri_core::sim::{score, Scenario, Truth};
use hri_core::HexId;

#[derive(Parser)]
#[command(name = "hri", version, about = "Simulate, validate, replay and score /humans event logs")]
struct Cli {
    /// Manager configuration (TOML); keys override the scenario or recorded values.
    #[arg(long, global = true, env = "HRI_CONFIG")]
    config: Option<PathBuf>,
    /// Output path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// No summary on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and record the bus (log plus `<log>.truth.json`).
    Simulate {
        scenario: PathBuf,
        /// Replaces the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a log against the protocol rules.
    Validate { log: PathBuf },
    /// Re-run the kinematics node and person manager over a log's perception events.
    Replay { log: PathBuf },
    /// Compare a simulated log with its ground truth.
    Score {
        log: PathBuf,
        /// Defaults to `<log>.truth.json`.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Print the URDF of a body model.
    Urdf { height: f64, body_id: String },
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn input(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 2, error: error.into() }
}

fn internal(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 1, error: error.into() }
}

fn pipeline_failure(e: PipelineError) -> Failure {
    match e {
        PipelineError::Meta(_) | PipelineError::Event { .. } | PipelineError::Config(_) => input(e),
        _ => internal(e),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(input)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(internal)
}

fn overrides(path: Option<&Path>) -> Result<Map<String, Value>, Failure> {
    let Some(path) = path else { return Ok(Map::new()) };
    let table: toml::Table = toml::from_str(&read(path)?)
        .with_context(|| format!("{}", path.display()))
        .map_err(input)?;
    match serde_json::to_value(table).map_err(input)? {
        Value::Object(map) => Ok(map),
        _ => Err(input(anyhow!("{}: not a table", path.display()))),
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    PathBuf::from(format!("{stem}{suffix}"))
}

struct Outcome {
    report: Value,
    summary: String,
    code: u8,
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    let config = overrides(cli.config.as_deref())?;
    match &cli.command {
        Command::Simulate { scenario, seed } => {
            let text = read(scenario)?;
            let mut s = Scenario::from_json(&text, &scenario.display().to_string()).map_err(input)?;
            if let Some(seed) = seed {
                s.seed = *seed;
            }
            let run = pipeline::simulate(&s, &config).map_err(pipeline_failure)?;
            let out = cli.out.clone().unwrap_or_else(|| with_suffix(scenario, ".hrilog"));
            let truth = Truth::truth_path(&out);
            write(&out, &run.log)?;
            write(&truth, &run.truth.to_json())?;
            let events = run.log.lines().filter(|l| l.contains("\"seq\"")).count();
            Ok(Outcome {
                summary: format!("{}: {} ticks, {events} events -> {}", s.name, run.truth.ticks.len(), out.display()),
                report: json!({
                    "events": events,
                    "kinematics_failures": run.kinematics_failures,
                    "log": out.display().to_string(),
                    "scenario": s.name,
                    "seed": s.seed,
                    "ticks": run.truth.ticks.len(),
                    "truth": truth.display().to_string(),
                }),
                code: 0,
            })
        }
        Command::Validate { log } => {
            let report = conformance::check_log(&read(log)?).map_err(input)?;
            let summary = if report.is_conformant() {
                format!("{}: {} events, conformant", log.display(), report.events)
            } else {
                let mut s = format!("{}: {} violation(s)", log.display(), report.violations.len());
                for v in report.violations.iter().take(20) {
                    s.push_str(&format!("\n  line {}: [{}] {}", v.line, v.rule, v.detail));
                }
                s
            };
            Ok(Outcome {
                code: if report.is_conformant() { 0 } else { 3 },
                report: serde_json::to_value(&report).map_err(internal)?,
                summary,
            })
        }
        Command::Replay { log } => {
            let parsed = EventLog::parse(&read(log)?).map_err(input)?;
            let config = if config.is_empty() {
                None
            } else {
                let (recorded, _) = pipeline::log_setup(&parsed).map_err(pipeline_failure)?;
                Some(recorded.merged(&config).map_err(input)?)
            };
            let text = pipeline::replay(&parsed, config).map_err(pipeline_failure)?;
            let out = cli.out.clone().unwrap_or_else(|| with_suffix(log, ".replay.hrilog"));
            write(&out, &text)?;
            let events = text.lines().filter(|l| l.contains("\"seq\"")).count();
            Ok(Outcome {
                summary: format!("{}: {events} events -> {}", log.display(), out.display()),
                report: json!({"events": events, "log": out.display().to_string()}),
                code: 0,
            })
        }
        Command::Score { log, truth } => {
            let parsed = EventLog::parse(&read(log)?).map_err(input)?;
            let truth_path = truth.clone().unwrap_or_else(|| Truth::truth_path(log));
            let truth = Truth::from_json(&read(&truth_path)?)
                .with_context(|| format!("{}", truth_path.display()))
                .map_err(input)?;
            let report = score(&parsed, &truth).map_err(input)?;
            Ok(Outcome {
                summary: format!(
                    "{}: continuity {:.3}, association {:.3}, gaze P/R {:.3}/{:.3}",
                    log.display(),
                    report.identity_continuity,
                    report.association_accuracy,
                    report.gaze_precision,
                    report.gaze_recall
                ),
                report: serde_json::to_value(&report).map_err(internal)?,
                code: 0,
            })
        }
        Command::Urdf { height, body_id } => {
            let id: HexId = body_id.parse().map_err(input)?;
            let model = KinematicModel::generate(id, *height).map_err(input)?;
            let xml = emit_urdf(&model);
            match &cli.out {
                Some(out) => write(out, &xml)?,
                None => print!("{xml}"),
            }
            Ok(Outcome {
                report: Value::Null,
                summary: format!("body_{id}: height {height} m, {} links", model.links.len()),
                code: 0,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            if !outcome.report.is_null() {
                println!("{}", outcome.report);
            }
            if !cli.quiet {
                eprintln!("{}", outcome.summary);
            }
            ExitCode::from(outcome.code)
        }
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

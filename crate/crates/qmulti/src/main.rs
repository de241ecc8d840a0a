use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use qmulti::literal::matrix_to_json;
use qmulti::run::{environment_for, run_sample, summary_json};
use qmulti::sample::at;
use qmulti::{parse_scenario, run_scenario, sample_trajectory, Format, Scenario, TaskArgs};
use qmulti_core::KEY_DELIMITER;

#[derive(Parser)]
#[command(name = "qmulti", version, about = "Run multi-observable and multi-instrument scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    Structured,
}

#[derive(Subcommand)]
enum Command {
    /// Run every task of a scenario and print the report.
    Run {
        scenario: PathBuf,
        /// Tolerance overriding the one in the document.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, value_enum, default_value = "structured")]
        report: ReportFormat,
        /// Run independent tasks concurrently.
        #[arg(long)]
        parallel: bool,
    },
    /// Re-run one sample task with a different trajectory count and seed.
    Sample {
        scenario: PathBuf,
        #[arg(long)]
        task: String,
        #[arg(long)]
        trajectories: usize,
        #[arg(long)]
        seed: u64,
    },
}

fn load(path: &PathBuf, tol: Option<f64>) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_scenario(&text, tol).with_context(|| format!("parsing {}", path.display()))
}

/// Setup failures (`Err`) exit with 2; a sampling failure or a frequency
/// outside the acceptance band exits with 1.
fn sample(path: &PathBuf, name: &str, trajectories: usize, seed: u64) -> Result<ExitCode> {
    let s = load(path, None)?;
    let index = s.task_index(name).with_context(|| format!("no task named {name:?}"))?;
    let TaskArgs::Sample { instruments, state, steps, .. } = &s.tasks[index].args else {
        bail!("task {name:?} is not a sample task");
    };
    if trajectories == 0 {
        bail!("--trajectories must be positive");
    }
    let env = environment_for(&s, index);
    let run = run_sample(instruments, state, *steps, trajectories, seed, &env, s.tolerance).and_then(
        |(chain, rho0, steps, summary)| {
            let first =
                sample_trajectory(&chain, &rho0, at(seed, 0), steps, s.tolerance.eps).map_err(|e| e.to_string())?;
            Ok((steps, summary, first))
        },
    );
    let (steps, summary, first) = match run {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: task {name:?}: {e}");
            return Ok(ExitCode::from(1));
        }
    };
    let outcomes: Vec<Vec<&str>> = first.outcomes.iter().map(|k| k.split(KEY_DELIMITER).collect()).collect();
    let doc = json!({
        "task": name,
        "summary": summary_json(&summary, seed, steps),
        "first_trajectory": {
            "seed": first.seed,
            "outcomes": outcomes,
            "weights": first.weights,
            "states": first.states.iter().map(|st| matrix_to_json(st.matrix())).collect::<Vec<_>>(),
        },
    });
    emit(&(serde_json::to_string_pretty(&doc).expect("summary serializes") + "\n"));
    Ok(ExitCode::from(u8::from(!summary.within)))
}

/// Writes to stdout, tolerating a closed pipe (`qmulti run … | head`).
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scenario, tol, report, parallel } => load(&scenario, tol).map(|s| {
            let r = run_scenario(&s, parallel);
            let format = match report {
                ReportFormat::Text => Format::Text,
                ReportFormat::Structured => Format::Structured,
            };
            emit(&r.render(format));
            ExitCode::from(r.exit_code() as u8)
        }),
        Command::Sample { scenario, task, trajectories, seed } => sample(&scenario, &task, trajectories, seed),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(2)
    })
}

//! `mhs`: solver runs, breaking-time and analyticity studies, norm reports
//! and the property verification suites.
//!
//! Exit codes: 0 ok, 1 verification failed, 2 configuration error,
//! 3 breakdown, 4 no breaking detected, 5 analyticity radius collapse.

mod commands;
mod config;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mhs_core::verify::Suite;

use commands::{Outcome, CONFIG_EXIT};
use config::{ConfigError, Defaults, Method, ScenarioArgs};

#[derive(Parser)]
#[command(
    name = "mhs",
    version,
    about = "Modified Hunter-Saxton solvers and checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one scenario and stream CSV history / JSONL snapshots.
    Solve(ScenarioArgs),
    /// Run Eulerian, Lagrangian and Taylor side by side.
    Compare(ScenarioArgs),
    /// Estimate the wave-breaking time.
    Blowup(ScenarioArgs),
    /// Track spatial and temporal analyticity radii.
    Analyticity(ScenarioArgs),
    /// Norm report for a snapshot file.
    Norms(ScenarioArgs),
    /// Run the property suites; `--out` receives the JSON failure report.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
}

fn run(cli: Cli, out: &mut dyn Write) -> anyhow::Result<Outcome> {
    match cli.command {
        Command::Solve(a) => commands::solve(&a.resolve(Defaults::default())?, out),
        Command::Compare(a) => {
            let cfg = a.resolve(Defaults {
                method: Method::Compare,
                ..Defaults::default()
            })?;
            commands::compare(&cfg, out)
        }
        Command::Blowup(a) => commands::blowup(
            &a.resolve(Defaults {
                t_end: 5.0,
                ..Defaults::default()
            })?,
            out,
        ),
        Command::Analyticity(a) => commands::analyticity(&a.resolve(Defaults::default())?, out),
        Command::Norms(a) => commands::norms(&a.resolve(Defaults::default())?, out),
        Command::Verify { suite, scenario } => {
            let cfg = scenario.resolve(Defaults::default())?;
            let suite = Suite::parse(&suite).ok_or_else(|| {
                ConfigError(format!(
                    "unknown suite {suite:?} (spectral, lemmas, derivatives, equivalence, conservation, taylor, all)"
                ))
            })?;
            commands::verify(suite, cfg.seed, cfg.out.as_deref(), out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(cli, &mut lock) {
        Ok(outcome) => ExitCode::from(outcome.code()),
        Err(e) => {
            let _ = lock.flush();
            eprintln!("error: {e:#}");
            ExitCode::from(CONFIG_EXIT)
        }
    }
}

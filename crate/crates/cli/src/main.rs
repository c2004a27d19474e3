use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use isac_uav::harness::{
    parse_config, run_all, run_fig6, run_fig7, run_fig8, run_full_encounter, with_workers,
    ExperimentReport, ScenarioConfig,
};
use isac_uav::Error;

const EXIT_OTHER: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_EXPERIMENT: u8 = 3;

/// Monte Carlo and discrete-event experiments for ISAC-equipped UAVs.
#[derive(Debug, Parser)]
#[command(name = "isac-sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML scenario file; missing keys take built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Monte Carlo trials per experiment (overrides the config file).
    #[arg(long, global = true)]
    trials: Option<usize>,

    /// Output directory for CSV tables and summary.txt.
    #[arg(long, global = true, env = "ISAC_SIM_OUT", default_value = "out")]
    out: PathBuf,

    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Radar vs fused range-error variance per step.
    Fig6,
    /// Sensing improvement ratio across communication variances.
    Fig7,
    /// IFF time reduction over the decode/verdict grid.
    Fig8,
    /// One interrogation plus tracking of the responder.
    Encounter,
    /// Every experiment, then summary.txt.
    All,
}

fn load(cli: &Cli) -> Result<ScenarioConfig, Error> {
    let mut config = match &cli.config {
        Some(path) => parse_config(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(trials) = cli.trials {
        if trials == 0 {
            return Err(Error::Config {
                field: "trials".into(),
                message: "must be at least 1".into(),
            });
        }
        config.trials = trials;
    }
    Ok(config)
}

fn run(cli: &Cli, config: &ScenarioConfig) -> Result<Vec<ExperimentReport>, Error> {
    let out = cli.out.as_path();
    let command = cli.command;
    with_workers(cli.workers, || match command {
        Command::Fig6 => run_fig6(config, out).map(|r| vec![r]),
        Command::Fig7 => run_fig7(config, out).map(|r| vec![r]),
        Command::Fig8 => run_fig8(config, out).map(|r| vec![r]),
        Command::Encounter => run_full_encounter(config, out).map(|r| vec![r]),
        Command::All => run_all(config, out),
    })?
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    match run(&cli, &config) {
        Ok(reports) => {
            for report in &reports {
                for line in report.summary_lines() {
                    println!("{line}");
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = if e.is_validation() {
                EXIT_VALIDATION
            } else if matches!(e, Error::ExperimentFailed { .. }) {
                EXIT_EXPERIMENT
            } else {
                EXIT_OTHER
            };
            ExitCode::from(code)
        }
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use omd::harness::{run_experiment, write_outcome, ConfigValues, ExperimentConfig, ExperimentKind};
use omd::Result;

/// Runs an optimistic mirror descent experiment and writes its CSV trace.
#[derive(Debug, Parser)]
#[command(name = "omd", version)]
struct Cli {
    /// Experiment kind; may instead come from the config file.
    kind: Option<ExperimentKind>,
    /// key=value file mirroring the flags; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Payoff matrix CSV for saddle, game and game-bandit.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Graph file for maxflow.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Program file for cvxprog.
    #[arg(long)]
    program: Option<PathBuf>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Bandit perturbation radius.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Hölder exponent for holder.
    #[arg(long)]
    alpha: Option<f64>,
    /// Comma-separated target point for mirror-prox and holder.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    target: Option<Vec<f64>>,
    /// Ball radius for mirror-prox, divergence radius for holder.
    #[arg(long)]
    radius: Option<f64>,
    /// Trace path; the summary goes to `<out>.summary.json`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Disable the mixing step of the game players.
    #[arg(long)]
    no_mixing: bool,
}

impl Cli {
    fn values(self) -> ConfigValues {
        ConfigValues {
            kind: self.kind,
            matrix: self.matrix,
            graph: self.graph,
            program: self.program,
            rounds: self.rounds,
            seed: self.seed,
            delta: self.delta,
            epsilon: self.epsilon,
            alpha: self.alpha,
            target: self.target,
            radius: self.radius,
            out: self.out,
            no_mixing: self.no_mixing.then_some(true),
        }
    }
}

fn load(cli: Cli) -> Result<ExperimentConfig> {
    let base = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                omd::Error::InvalidInput(format!("cannot read {}: {e}", path.display()))
            })?;
            ConfigValues::parse(&text, path.parent().unwrap_or(Path::new(".")))?
        }
        None => ConfigValues::default(),
    };
    base.overlay(cli.values()).build()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load(cli) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let result = run_experiment(&config).and_then(|outcome| {
        write_outcome(&config, &outcome)?;
        Ok(outcome)
    });
    match result {
        Ok(outcome) => {
            println!("{}", outcome.summary.to_json());
            if outcome.summary.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("certificate violated");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

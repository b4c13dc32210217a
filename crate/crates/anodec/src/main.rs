use std::path::PathBuf;
use std::process::ExitCode;

use anodec::config::{self, Overrides, Setup};
use anodec::pipeline::{Outcome, Run, Stage};
use anodec::{PipelineError, Result};
use clap::{Args, Parser, Subcommand};

/// Learn a neural ODE model and controller for a pneumatic arm and compare
/// it against a PI baseline.
#[derive(Parser)]
#[command(name = "anodec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Record the six probing trials.
    Collect(Common),
    /// Fit the model on the collected trials.
    TrainModel(Common),
    /// Fit the controller on the trained model.
    TrainController(Common),
    /// Run the reference suite for the learned controller and the PI baseline.
    Evaluate(Common),
    /// Every stage in order, skipping completed ones.
    Pipeline(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Plant setup: 1 (unloaded) or 2 (loaded).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    setup: Option<u8>,
    /// Output directory [default: runs/setup<N>-seed<S>].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use the reduced training budgets.
    #[arg(long)]
    ci_profile: bool,
    /// Add disturbed trials to the evaluation.
    #[arg(long)]
    disturbances: bool,
}

impl Common {
    fn open(&self) -> Result<Run> {
        let setup = self.setup.map(Setup::try_from).transpose().map_err(PipelineError::Config)?;
        let overrides = Overrides { setup, seed: self.seed, ci_profile: self.ci_profile, out: self.out.clone() };
        let (cfg, out) = config::load(self.config.as_deref(), &overrides)?;
        let out = out.unwrap_or_else(|| PathBuf::from(format!("runs/setup{}-seed{}", u8::from(cfg.setup), cfg.seed)));
        Run::open(out, cfg)
    }
}

fn report(stage: Stage, outcome: Outcome, run: &Run) {
    let verb = match outcome {
        Outcome::Ran => "wrote",
        Outcome::Skipped => "up to date",
    };
    eprintln!("{:<16} {verb}: {}", stage.label(), run.stage_dir(stage).display());
}

fn execute(cli: Cli) -> Result<()> {
    let (common, stages): (&Common, &[Stage]) = match &cli.command {
        Command::Collect(c) => (c, &[Stage::Collect]),
        Command::TrainModel(c) => (c, &[Stage::TrainModel]),
        Command::TrainController(c) => (c, &[Stage::TrainController]),
        Command::Evaluate(c) => (c, &[Stage::Evaluate]),
        Command::Pipeline(c) => (c, &Stage::ALL),
    };
    let run = common.open()?;
    for &stage in stages {
        let outcome = match stage {
            Stage::Collect => run.collect(),
            Stage::TrainModel => run.train_model(),
            Stage::TrainController => run.train_controller(),
            Stage::Evaluate => run.evaluate(common.disturbances),
        };
        match outcome {
            Ok(o) => report(stage, o, &run),
            Err(PipelineError::PartialSuite(n)) => {
                eprintln!("warning: {n} evaluation trial(s) failed; partial report in {}", run.stage_dir(stage).display());
                return Err(PipelineError::PartialSuite(n));
            }
            Err(e) => return Err(e),
        }
        if stage == Stage::Evaluate {
            let suite = run.load_evaluation()?;
            for row in &suite.summary {
                println!(
                    "{:<13} {:<7} N={:<3} {:>7.3} ± {:.3} deg",
                    row.distribution.label(),
                    row.controller,
                    row.n,
                    row.mean_rmse_deg,
                    row.std_rmse_deg
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

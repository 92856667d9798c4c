//! `latent-patrol`: train, evaluate, compare and ablate patrol policies.

mod compare;
mod error;
mod run;
mod spec;
mod summary;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use patrol_core::{Ablation, Algorithm};

use crate::error::{CliError, Result};
use crate::spec::{Overrides, RunSpec, DEFAULT_OUT};

/// Overrides the output root of every command.
const OUT_ENV: &str = "LATENT_PATROL_OUT";

#[derive(Parser)]
#[command(name = "latent-patrol", version, about = "EM latent-variable policy gradient for UAV wildlife patrol")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one run per seed and write metrics and checkpoints.
    Train(TrainArgs),
    /// Train with a component disabled.
    Ablate {
        #[command(flatten)]
        args: TrainArgs,
        /// no_encoder or frozen_m_step.
        #[arg(long, value_parser = parse::<Ablation>)]
        which: Ablation,
    },
    /// Greedy evaluation of a checkpoint.
    Eval {
        /// Checkpoint directory, checkpoint root, or seed directory.
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 50)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Merge result directories and report which does best per metric.
    Compare {
        /// Result directories such as out/em_pg and out/independent_pg.
        dirs: Vec<PathBuf>,
        /// Merged CSV path; defaults to <output root>/comparison.csv.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct TrainArgs {
    /// Run spec file.
    spec: PathBuf,
    #[arg(long, value_parser = parse::<Algorithm>)]
    algorithm: Option<Algorithm>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    batch_episodes: Option<usize>,
    #[arg(long)]
    eval_every: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Comma-separated seed list.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Output root.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Continue from the latest checkpoint of each seed when present.
    #[arg(long)]
    resume: bool,
    /// Seeds trained concurrently; defaults to the number of CPUs.
    #[arg(long)]
    jobs: Option<usize>,
}

fn parse<T: std::str::FromStr<Err = patrol_core::Error>>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|e: patrol_core::Error| e.to_string())
}

fn out_env() -> Option<PathBuf> {
    std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

fn train(args: &TrainArgs, ablation: Option<Ablation>) -> Result<()> {
    let overrides = Overrides {
        algorithm: args.algorithm,
        episodes: args.episodes,
        batch_episodes: args.batch_episodes,
        eval_every: args.eval_every,
        learning_rate: args.learning_rate,
        seeds: args.seeds.clone(),
        out: args.out.clone(),
    };
    let spec = RunSpec::load(&args.spec, &overrides, out_env())?;
    let jobs = args.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let logs = run::train_all(&spec, ablation, args.resume, jobs)?;
    for &seed in &spec.train.seeds {
        println!("wrote {}", run::seed_dir(&spec, ablation, seed).join("metrics.csv").display());
    }
    print!("{}", run::summary(&logs));
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => train(&args, None),
        Command::Ablate { args, which } => train(&args, Some(which)),
        Command::Eval { checkpoint, episodes, seed } => {
            if episodes == 0 {
                return Err(CliError::Usage("--episodes must be at least 1".into()));
            }
            let (meta, dir, s) = run::eval_checkpoint(&checkpoint, episodes, seed)?;
            print!("{}", run::format_eval(&meta, &dir, &s));
            Ok(())
        }
        Command::Compare { dirs, output } => {
            if dirs.len() < 2 {
                return Err(CliError::Usage("compare needs at least two result directories".into()));
            }
            let sets = dirs.iter().map(|d| compare::load(d)).collect::<Result<Vec<_>>>()?;
            let csv = compare::merged_csv(&sets)?;
            let path = output.unwrap_or_else(|| out_env().unwrap_or_else(|| DEFAULT_OUT.into()).join("comparison.csv"));
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
            }
            std::fs::write(&path, csv).map_err(|e| CliError::io(&path, e))?;
            println!("wrote {}", path.display());
            for line in compare::verdicts(&sets) {
                println!("{line}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

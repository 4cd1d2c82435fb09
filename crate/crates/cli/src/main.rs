use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use perpred_cli::commands;
use perpred_cli::config::{ExperimentConfig, Task};
use perpred_cli::CliError;

/// Personalized prediction experiment harness.
#[derive(Parser)]
#[command(name = "perpred", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic sample and write it as CSV.
    Gen(CommonArgs),
    /// Enumerate the sparse classifier list for a dataset.
    Listlearn(CommonArgs),
    /// Learn a query-containing halfspace reference class.
    Refclass(CommonArgs),
    /// Personalized prediction at a query point.
    Predict(CommonArgs),
    /// Split, train, and score every test point as its own query.
    Evaluate(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Experiment configuration (one JSON document).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Caps worker threads; defaults to the available cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Overrides the config's output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn prepare(args: &CommonArgs, task: Task) -> Result<ExperimentConfig, CliError> {
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        // Ignore the error if a pool already exists (tests build one pool).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(t) = cfg.task {
        if t != task {
            return Err(CliError::Config(format!(
                "config declares task {t:?} but the {task:?} subcommand was invoked"
            )));
        }
    }
    cfg.task = Some(task);
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    Ok(cfg)
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Gen(args) => commands::cmd_gen(&prepare(args, Task::Gen)?),
        Command::Listlearn(args) => commands::cmd_listlearn(&prepare(args, Task::Listlearn)?),
        Command::Refclass(args) => commands::cmd_refclass(&prepare(args, Task::Refclass)?),
        Command::Predict(args) => commands::cmd_predict(&prepare(args, Task::Predict)?),
        Command::Evaluate(args) => {
            commands::cmd_evaluate(&prepare(args, Task::Evaluate)?).map(|_| ())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

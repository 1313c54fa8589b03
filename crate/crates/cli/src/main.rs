mod artifacts;
mod config;
mod error;
mod report;
mod stages;
mod svgplot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::ExperimentConfig;
use error::{CliError, Result};

/// Synthetic-signal classification pipeline: scattering features, sparse
/// multinomial logistic regression, and per-class signal extraction.
#[derive(Parser)]
#[command(name = "scatfex", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct StageArgs {
    /// Experiment config (JSON). Omitted fields take built-in defaults;
    /// required unless --print-config is given.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override master_seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Override output_dir from the config.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Print the fully resolved config as JSON and exit without running.
    #[arg(long)]
    print_config: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the whole pipeline and write the report.
    Run(StageArgs),
    /// Generate the train/test datasets.
    Gen(StageArgs),
    /// Compute scattering features from the generated datasets.
    Scatter(StageArgs),
    /// Fit the sparse classifier on the training features.
    Train(StageArgs),
    /// Extract one class-revealing signal per class from the trained model.
    Extract(StageArgs),
    /// Evaluate the artifacts and write the report.
    Eval(StageArgs),
    /// Render SVG plots (with CSV data siblings) from the artifacts.
    Plot(StageArgs),
}

impl Command {
    fn args(&self) -> &StageArgs {
        match self {
            Command::Run(a)
            | Command::Gen(a)
            | Command::Scatter(a)
            | Command::Train(a)
            | Command::Extract(a)
            | Command::Eval(a)
            | Command::Plot(a) => a,
        }
    }
}

fn resolve_config(args: &StageArgs) -> Result<ExperimentConfig> {
    let base = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None if args.print_config => ExperimentConfig::default(),
        None => {
            return Err(CliError::Config(
                "--config <FILE> is required (use --print-config to see the defaults)".into(),
            ))
        }
    };
    base.with_overrides(args.seed, args.out.clone())
}

fn dispatch(cli: &Cli) -> Result<()> {
    let args = cli.command.args();
    let cfg = resolve_config(args)?;
    if args.print_config {
        println!("{}", cfg.canonical_json());
        return Ok(());
    }
    match &cli.command {
        Command::Run(_) => {
            let report = stages::run_all(&cfg)?;
            print!("{}", report.to_text());
        }
        Command::Gen(_) => stages::run_gen(&cfg)?,
        Command::Scatter(_) => stages::run_scatter(&cfg)?,
        Command::Train(_) => stages::run_train(&cfg)?,
        Command::Extract(_) => stages::run_extract(&cfg)?,
        Command::Eval(_) => {
            let report = stages::run_eval(&cfg)?;
            print!("{}", report.to_text());
        }
        Command::Plot(_) => stages::run_plot(&cfg)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

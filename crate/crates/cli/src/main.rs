use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use rydsqueeze_cli::{run_subcommand, CliError, ExperimentConfig, Subcommand};

/// Simulations and calibration pipelines for Rydberg-dressed spin squeezing.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// Pipeline to run.
    #[arg(value_enum)]
    command: Option<Subcommand>,
    /// Same as the positional argument.
    #[arg(long = "subcommand", value_enum, conflicts_with = "command")]
    subcommand: Option<Subcommand>,
    /// Experiment configuration; the shipped operating point when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores), overriding `run.threads`.
    #[arg(long)]
    threads: Option<usize>,
    /// Print the shipped configuration and exit.
    #[arg(long)]
    print_default_config: bool,
}

fn run(args: Args) -> Result<(), CliError> {
    if args.print_default_config {
        print!("{}", rydsqueeze_cli::config::DEFAULT_CONFIG);
        return Ok(());
    }
    let cmd = args
        .command
        .or(args.subcommand)
        .ok_or_else(|| CliError::Validation("no subcommand given (see --help)".into()))?;
    let config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let summary = run_subcommand(cmd, &config, args.seed, args.out.as_deref(), args.threads)?;
    println!("{} finished: {} data files, manifest {}", summary.subcommand, summary.files.len(), summary.manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(args) => args,
        // usage errors count as validation failures; help and version succeed
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

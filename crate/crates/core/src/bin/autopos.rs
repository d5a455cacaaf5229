use std::path::PathBuf;
use std::process::ExitCode;

use autopos::config::Overrides;
use autopos::runner::{format_summary, run_all, run_scenario};
use autopos::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(version, about = "Simulate ranging, auto-position nodes with CF and CGP, and compare them")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Run every *.toml scenario in a directory and combine the results.
    #[command(alias = "run_all")]
    RunAll {
        #[arg(long)]
        config_dir: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
}

#[derive(Args)]
struct OverrideArgs {
    #[arg(long)]
    epochs: Option<usize>,
    /// 2-D grid cell size in meters.
    #[arg(long)]
    cell: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Propagate CGP beliefs from epoch to epoch (`--carry-beliefs=false` disables).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    carry_beliefs: Option<bool>,
    #[arg(long)]
    dump_measurements: bool,
    #[arg(long)]
    dump_beliefs: bool,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl From<OverrideArgs> for Overrides {
    fn from(a: OverrideArgs) -> Self {
        Overrides {
            epochs: a.epochs,
            cell: a.cell,
            seed: a.seed,
            carry_beliefs: a.carry_beliefs,
            dump_measurements: a.dump_measurements,
            dump_beliefs: a.dump_beliefs,
            out_dir: a.out_dir,
        }
    }
}

fn exit_code(e: &Error) -> ExitCode {
    if e.is_config() {
        ExitCode::from(1)
    } else {
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Run { config, overrides } => match run_scenario(&config, &overrides.into()) {
            Ok(outcome) => {
                print!("{}", format_summary(&[&outcome]));
                println!("outputs written to {}", outcome.config.output.dir.display());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                exit_code(&e)
            }
        },
        Command::RunAll { config_dir, overrides } => match run_all(&config_dir, &overrides.into()) {
            Ok(batch) => {
                let refs: Vec<_> = batch.outcomes.iter().collect();
                print!("{}", format_summary(&refs));
                println!("combined outputs written to {}", batch.combined_dir.display());
                match batch.failures.first() {
                    None => ExitCode::SUCCESS,
                    Some((path, e)) => {
                        eprintln!("{} scenario(s) failed, first: {}: {e}", batch.failures.len(), path.display());
                        exit_code(e)
                    }
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                exit_code(&e)
            }
        },
    }
}

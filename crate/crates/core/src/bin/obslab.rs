use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use obslab::experiment::{self, RunOptions};

#[derive(Parser)]
#[command(name = "obslab", version, about = "Batch runner for the observability lab experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config file.
    Run {
        config: PathBuf,
        /// Override a config entry, e.g. `--set physics.mass=2`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        quiet: bool,
    },
    /// List the available experiments.
    List,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { experiment::EXIT_CONFIG as u8 } else { 0 });
        }
    };
    match cli.command {
        Command::List => {
            print!("{}", experiment::list_text());
            ExitCode::SUCCESS
        }
        Command::Run { config, set, output_dir, seed, quiet } => {
            let threads = match experiment::threads_from_env(std::env::var("OBSLAB_THREADS").ok().as_deref()) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return ExitCode::from(experiment::EXIT_CONFIG as u8);
                }
            };
            let opts = RunOptions { overrides: set, output_dir, seed, quiet, threads };
            ExitCode::from(experiment::execute(&config, &opts) as u8)
        }
    }
}

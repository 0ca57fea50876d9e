use std::path::PathBuf;
use std::process::ExitCode;

use am2r_bench::{run, Command, Invocation};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "am2r", version, about = "Adaptive-marking mesh refinement: sweeps, training, deployment, comparison and plots")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Fixed-parameter runs over the (theta, rho) grid and problem set.
    Sweep(Common),
    /// Train a marking policy with PPO.
    Train(Common),
    /// Run a trained policy on the evaluation problems.
    Deploy(Common),
    /// Policy against the best fixed parameters (or another policy).
    Compare(Common),
    /// Render SVG figures from the CSVs of a run directory.
    Plot(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// `key=value` settings that override the config file.
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string().lines().next().unwrap_or("").replace('"', "\\\"");
            eprintln!("error kind=usage message=\"{msg}\"");
            return ExitCode::from(2);
        }
    };
    let (command, c) = match cli.command {
        Sub::Sweep(c) => (Command::Sweep, c),
        Sub::Train(c) => (Command::Train, c),
        Sub::Deploy(c) => (Command::Deploy, c),
        Sub::Compare(c) => (Command::Compare, c),
        Sub::Plot(c) => (Command::Plot, c),
    };
    let inv = Invocation { command, config: c.config, seed: c.seed, out: c.out, overrides: c.overrides };
    match run(&inv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.machine_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! Sweep, train, deploy, compare and plot harness around `am2r-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod plot;
pub mod svg;

use std::path::PathBuf;

pub use error::{BenchError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Sweep,
    Train,
    Deploy,
    Compare,
    Plot,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Sweep => "sweep",
            Command::Train => "train",
            Command::Deploy => "deploy",
            Command::Compare => "compare",
            Command::Plot => "plot",
        }
    }
}

/// One parsed command line.
#[derive(Clone, Debug, PartialEq)]
pub struct Invocation {
    pub command: Command,
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub overrides: Vec<String>,
}

/// Loads the config, applies `--seed` and overrides, and runs the command.
pub fn run(inv: &Invocation) -> Result<()> {
    let mut cfg = config::Config::load(&inv.config)?;
    for o in &inv.overrides {
        cfg.set_override(o)?;
    }
    if let Some(seed) = inv.seed {
        cfg.set("run.seed", &seed.to_string());
    }
    let settings = config::Settings::resolve(&cfg)?;
    let out = &inv.out;
    match inv.command {
        Command::Sweep => commands::sweep(&settings, out).map(drop),
        Command::Train => commands::train(&settings, out).map(drop),
        Command::Deploy => commands::deploy(&settings, out).map(drop),
        Command::Compare => commands::compare(&settings, out).map(drop),
        Command::Plot => {
            let report = commands::plot(&settings, out)?;
            println!("plots written={} skipped={}", report.written.len(), report.problems.len());
            Ok(())
        }
    }
}

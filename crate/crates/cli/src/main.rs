//! Experiment front-end: scenario parsing, seeded batch execution and
//! CSV/JSON emission for every analysis and simulation surface.

mod commands;
mod manifest;

use anyhow::Result;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "hexnet",
    version,
    about = "Joint link scheduling and power control toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lattice analysis tables: (r, F, G) per path-loss exponent and the
    /// constrained rate-density sweep against the energy budget.
    Asymptotic(commands::asymptotic::Args),
    /// Per-link power / target-interference plan tables over distance and
    /// energy-slack grids.
    Plan(commands::plan::Args),
    /// Run the sequential scheduler standalone on a topology file.
    Schedule(commands::schedule::Args),
    /// Run the slotted coordinator MAC simulator on a scenario.
    Simulate(commands::simulate::Args),
    /// Run the CSMA/CA baseline on a scenario.
    Baseline(commands::baseline::Args),
    /// Batch comparison of schemes over seeds and load/size grids.
    Sweep(commands::sweep::Args),
}

fn main() -> Result<()> {
    if let Ok(workers) = std::env::var("HEXNET_WORKERS") {
        let n: usize = workers.parse()?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    match Cli::parse().command {
        Command::Asymptotic(a) => commands::asymptotic::run(a),
        Command::Plan(a) => commands::plan::run(a),
        Command::Schedule(a) => commands::schedule::run(a),
        Command::Simulate(a) => commands::simulate::run(a),
        Command::Baseline(a) => commands::baseline::run(a),
        Command::Sweep(a) => commands::sweep::run(a),
    }
}

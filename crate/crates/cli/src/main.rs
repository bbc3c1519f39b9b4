//! Command-line front end for the retweet-graph growth model: simulate
//! traces, sweep parameters, replay histories, estimate parameters, analyze
//! logs, run the self-check battery, and ingest tweet files.
//!
//! Every subcommand is deterministic: identical flags and inputs produce
//! byte-identical output files, regardless of worker-thread count.

mod commands;
mod output;

use anyhow::Result;
use clap::{Parser, Subcommand};
use commands::{
    AnalyzeArgs, EstimateArgs, IngestArgs, ReplayArgs, SimulateArgs, SweepArgs, VerifyArgs,
};

#[derive(Parser)]
#[command(
    name = "retweet-graph",
    version,
    about = "Retweet-graph growth simulator and analytics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grow a graph from scratch and export its trace.
    Simulate(SimulateArgs),
    /// Monte Carlo over a lambda x p grid, one CSV row per cell.
    Sweep(SweepArgs),
    /// Branch a recorded run at its densification point and grow
    /// continuations for comparison.
    Replay(ReplayArgs),
    /// Parameter estimates at every step of an event log.
    Estimate(EstimateArgs),
    /// Progression and densification report for an event log.
    Analyze(AnalyzeArgs),
    /// Run the self-check battery and write a claim report.
    Verify(VerifyArgs),
    /// Build a graph from a tweet file (JSONL or CSV).
    Ingest(IngestArgs),
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate(args) => commands::run_simulate(args),
        Command::Sweep(args) => commands::run_sweep(args),
        Command::Replay(args) => commands::run_replay(args),
        Command::Estimate(args) => commands::run_estimate(args),
        Command::Analyze(args) => commands::run_analyze(args),
        Command::Verify(args) => commands::run_verify(args),
        Command::Ingest(args) => commands::run_ingest(args),
    }
}

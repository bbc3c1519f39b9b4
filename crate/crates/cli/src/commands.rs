//! One handler per subcommand. Every handler routes its artifacts through
//! an [`OutputGuard`] so a failure part-way leaves nothing behind.

use crate::output::{
    write_comparison_csv, write_json, AnalyzeSummary, FinalStats, IngestSummary, OutputGuard,
    ReplayAggregates, ReplaySummary, SimulateSummary, StopJson,
};
use anyhow::{bail, Context, Result};
use clap::{ArgAction, ArgGroup, Args, ValueEnum};
use retweet_graph::engine::RunSeed;
use retweet_graph::event_log::{read_events, replay_log_with_progression, write_events};
use retweet_graph::experiments::{
    parameter_sweep, replay_from_events, write_sweep_csv, ReplayConfig, RunMetrics, SummaryStat,
    SweepConfig,
};
use retweet_graph::ingest::{
    build_progression, hourly_stats, parse_stream, write_hourly_csv, InputFormat,
};
use retweet_graph::progression::Checkpoints;
use retweet_graph::state::StateConfig;
use retweet_graph::stats::empirical_moments;
use retweet_graph::verify::{run_full_suite, DEFAULT_SEED};
use retweet_graph::{estimation, simulate, ModelParams, SimOptions, StopCondition};
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

fn install_jobs(jobs: Option<usize>) -> Result<()> {
    if let Some(n) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
    }
    Ok(())
}

fn model_params(lambda: f64, p: f64, q: f64) -> Result<ModelParams> {
    ModelParams::new(lambda, p, q).map_err(|e| anyhow::anyhow!(e))
}

fn load_events(path: &PathBuf) -> Result<Vec<retweet_graph::event_log::TimedEvent>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_events(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn stat_of(values: &[f64]) -> SummaryStat {
    if values.len() == 1 {
        return SummaryStat {
            mean: values[0],
            se: 0.0,
        };
    }
    let m = empirical_moments(values).expect("at least one run");
    SummaryStat {
        mean: m.mean,
        se: m.se,
    }
}

#[derive(Args)]
#[command(group(ArgGroup::new("stop").required(true).args(["steps", "nodes"])))]
pub struct SimulateArgs {
    /// Rate of new original tweets relative to retweets.
    #[arg(long)]
    pub lambda: f64,
    /// Probability that a retweet comes from a new user.
    #[arg(long)]
    pub p: f64,
    /// Probability that a retweet attaches to the tree's root.
    #[arg(long)]
    pub q: f64,
    /// Stop once the time index reaches this many steps.
    #[arg(long)]
    pub steps: Option<u64>,
    /// Stop once the graph holds this many users.
    #[arg(long)]
    pub nodes: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Record a progression row every K steps.
    #[arg(long, value_name = "K", default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub checkpoint_every: u64,
    /// Whether a T3 retweeter joins the retweeted tree.
    #[arg(long, default_value_t = true, action = ArgAction::Set, value_name = "BOOL")]
    pub trees_grow_on_t3: bool,
    /// Output directory (events.jsonl, progression.csv, summary.json).
    #[arg(short, long, value_name = "DIR")]
    pub out: PathBuf,
}

pub fn run_simulate(args: SimulateArgs) -> Result<()> {
    let params = model_params(args.lambda, args.p, args.q)?;
    let stop = match (args.steps, args.nodes) {
        (Some(t), None) => StopCondition::Steps(t),
        (None, Some(n)) => StopCondition::Nodes(n),
        _ => unreachable!("clap enforces exactly one stop flag"),
    };
    let options = SimOptions {
        checkpoints: Checkpoints::Every(args.checkpoint_every),
        keep_events: true,
        state_config: StateConfig {
            trees_grow_on_t3: args.trees_grow_on_t3,
        },
    };
    let trace = simulate(&params, None, stop, RunSeed::new(args.seed), &options)
        .map_err(|e| anyhow::anyhow!(e))?;

    let mut guard = OutputGuard::new();
    guard.ensure_dir(&args.out)?;
    write_events(guard.create(&args.out.join("events.jsonl"))?, &trace.events)?;
    trace
        .progression
        .write_csv(guard.create(&args.out.join("progression.csv"))?)?;
    let metrics = RunMetrics::from_trace(&trace);
    let summary = SimulateSummary {
        lambda: args.lambda,
        p: args.p,
        q: args.q,
        seed: args.seed,
        stop: match stop {
            StopCondition::Steps(t) => StopJson::Steps(t),
            StopCondition::Nodes(n) => StopJson::Nodes(n),
        },
        trees_grow_on_t3: args.trees_grow_on_t3,
        checkpoint_every: Some(args.checkpoint_every),
        final_stats: FinalStats::from_metrics(&metrics),
        densification_time: trace.progression.densification_time(),
        tau_n: trace.tau_n,
    };
    write_json(guard.create(&args.out.join("summary.json"))?, &summary)?;
    guard.defuse();
    println!(
        "simulated {} events into {}",
        trace.events.len(),
        args.out.display()
    );
    Ok(())
}

#[derive(Args)]
pub struct SweepArgs {
    /// Comma-separated lambda values (default 0.1..1.0 by 0.1).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub lambda_grid: Option<Vec<f64>>,
    /// Comma-separated p values (default 0.1..1.0 by 0.1).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub p_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.9)]
    pub q: f64,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub steps: u64,
    /// Runs per grid cell.
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    pub runs: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = true, action = ArgAction::Set, value_name = "BOOL")]
    pub trees_grow_on_t3: bool,
    /// Worker threads (results never depend on this).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output CSV path.
    #[arg(short, long, value_name = "FILE")]
    pub out: PathBuf,
}

pub fn run_sweep(args: SweepArgs) -> Result<()> {
    install_jobs(args.jobs)?;
    let config = SweepConfig {
        lambda_grid: args.lambda_grid.unwrap_or_else(SweepConfig::default_grid),
        p_grid: args.p_grid.unwrap_or_else(SweepConfig::default_grid),
        q: args.q,
        steps: args.steps,
        runs: args.runs,
        base_seed: args.seed,
        state_config: StateConfig {
            trees_grow_on_t3: args.trees_grow_on_t3,
        },
    };
    let cells = parameter_sweep(&config).map_err(|e| anyhow::anyhow!(e))?;
    let mut guard = OutputGuard::new();
    write_sweep_csv(&cells, guard.create(&args.out)?)?;
    guard.defuse();
    println!("swept {} cells into {}", cells.len(), args.out.display());
    Ok(())
}

#[derive(Args)]
pub struct ReplayArgs {
    /// Event log (JSONL) of the reference run.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    pub runs: u64,
    /// Superstar weight for the replays (not estimable from counts).
    #[arg(long, default_value_t = 0.9)]
    pub q: f64,
    /// Use this lambda instead of estimating at the branch point.
    #[arg(long, requires = "p")]
    pub lambda: Option<f64>,
    /// Use this p instead of estimating at the branch point.
    #[arg(long, requires = "lambda")]
    pub p: Option<f64>,
    /// Branch step (default: the reference's densification time).
    #[arg(long)]
    pub branch_step: Option<u64>,
    /// Node count to grow each replay to (default: the reference's).
    #[arg(long)]
    pub target_nodes: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = true, action = ArgAction::Set, value_name = "BOOL")]
    pub trees_grow_on_t3: bool,
    /// Worker threads (results never depend on this).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output directory (comparison.csv, summary.json).
    #[arg(short, long, value_name = "DIR")]
    pub out: PathBuf,
}

pub fn run_replay(args: ReplayArgs) -> Result<()> {
    install_jobs(args.jobs)?;
    let events = load_events(&args.input)?;
    let report = replay_from_events(
        &events,
        &ReplayConfig {
            q: args.q,
            params_override: args.lambda.zip(args.p),
            branch_step: args.branch_step,
            target_nodes: args.target_nodes,
            runs: args.runs,
            base_seed: args.seed,
            state_config: StateConfig {
                trees_grow_on_t3: args.trees_grow_on_t3,
            },
        },
    )?;

    let lcc_densities: Vec<f64> = report.per_run.iter().map(RunMetrics::lcc_density).collect();
    let (p5, p95) = report.percentile_band(RunMetrics::lcc_density, 5.0, 95.0);
    let summary = ReplaySummary {
        lambda: report.params.lambda,
        p: report.params.p,
        q: report.params.q,
        estimated: report.estimated,
        branch_step: report.branch_step,
        branch_nodes: report.branch_nodes,
        target_nodes: report.target_nodes,
        runs: report.runs,
        seed: report.base_seed,
        reference: FinalStats::from_metrics(&report.reference),
        replays: ReplayAggregates {
            edge_density: stat_of(
                &report
                    .per_run
                    .iter()
                    .map(RunMetrics::edge_density)
                    .collect::<Vec<_>>(),
            ),
            lcc_density: stat_of(&lcc_densities),
            lcc_fraction: stat_of(
                &report
                    .per_run
                    .iter()
                    .map(RunMetrics::lcc_fraction)
                    .collect::<Vec<_>>(),
            ),
            p5_lcc_density: p5,
            p95_lcc_density: p95,
        },
    };

    let mut guard = OutputGuard::new();
    guard.ensure_dir(&args.out)?;
    write_comparison_csv(&report, guard.create(&args.out.join("comparison.csv"))?)?;
    write_json(guard.create(&args.out.join("summary.json"))?, &summary)?;
    guard.defuse();
    println!(
        "replayed {} runs (branch t={}, lambda={:.4}, p={:.4}) into {}",
        report.runs,
        report.branch_step,
        report.params.lambda,
        report.params.p,
        args.out.display()
    );
    Ok(())
}

#[derive(Args)]
pub struct EstimateArgs {
    /// Event log (JSONL) to estimate from.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Whether a T3 retweeter joins the retweeted tree during replay.
    #[arg(long, default_value_t = true, action = ArgAction::Set, value_name = "BOOL")]
    pub trees_grow_on_t3: bool,
    /// Output CSV path.
    #[arg(short, long, value_name = "FILE")]
    pub out: PathBuf,
}

pub fn run_estimate(args: EstimateArgs) -> Result<()> {
    let events = load_events(&args.input)?;
    let (_, progression) = replay_log_with_progression(
        &events,
        StateConfig {
            trees_grow_on_t3: args.trees_grow_on_t3,
        },
    )?;
    let rows = estimation::estimate_series(&progression);
    let mut guard = OutputGuard::new();
    estimation::write_estimates_csv(&rows, guard.create(&args.out)?)?;
    guard.defuse();
    match rows.last().filter(|r| r.defined()) {
        Some(last) => println!(
            "final estimates at t={}: lambda_hat={:.6}, p_hat={:.6} ({})",
            last.t,
            last.lambda_hat.unwrap(),
            last.p_hat.unwrap().value,
            args.out.display()
        ),
        None => println!(
            "estimates undefined (no edges in the log); wrote {}",
            args.out.display()
        ),
    }
    Ok(())
}

#[derive(Args)]
pub struct AnalyzeArgs {
    /// Event log (JSONL) to analyze.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long, default_value_t = true, action = ArgAction::Set, value_name = "BOOL")]
    pub trees_grow_on_t3: bool,
    /// Output directory (progression.csv, densification.json).
    #[arg(short, long, value_name = "DIR")]
    pub out: PathBuf,
}

pub fn run_analyze(args: AnalyzeArgs) -> Result<()> {
    let events = load_events(&args.input)?;
    let (state, progression) = replay_log_with_progression(
        &events,
        StateConfig {
            trees_grow_on_t3: args.trees_grow_on_t3,
        },
    )?;
    let summary = AnalyzeSummary {
        t_final: state.time(),
        densification_time: progression.densification_time(),
        final_stats: state
            .time()
            .map(|_| FinalStats::from_metrics(&RunMetrics::from_state(&state, None))),
    };
    let mut guard = OutputGuard::new();
    guard.ensure_dir(&args.out)?;
    progression.write_csv(guard.create(&args.out.join("progression.csv"))?)?;
    write_json(guard.create(&args.out.join("densification.json"))?, &summary)?;
    guard.defuse();
    match summary.densification_time {
        Some(t) => println!("densifies at t={t}; wrote {}", args.out.display()),
        None => println!("never densifies; wrote {}", args.out.display()),
    }
    Ok(())
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SuiteName {
    /// Every claim.
    Full,
}

#[derive(Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = SuiteName::Full)]
    pub suite: SuiteName,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Exit nonzero when any claim fails.
    #[arg(long)]
    pub strict: bool,
    /// Worker threads (results never depend on this).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Report path (JSON array of claim records).
    #[arg(short, long, value_name = "FILE")]
    pub out: PathBuf,
}

pub fn run_verify(args: VerifyArgs) -> Result<()> {
    install_jobs(args.jobs)?;
    let SuiteName::Full = args.suite;
    let records = run_full_suite(args.seed);
    let mut guard = OutputGuard::new();
    write_json(guard.create(&args.out)?, &records)?;
    guard.defuse();

    let failed: Vec<&str> = records
        .iter()
        .filter(|r| !r.pass)
        .map(|r| r.claim.as_str())
        .collect();
    println!(
        "{}/{} claims pass ({})",
        records.len() - failed.len(),
        records.len(),
        args.out.display()
    );
    for claim in &failed {
        eprintln!("FAIL: {claim}");
    }
    if args.strict && !failed.is_empty() {
        bail!("{} claim(s) failed", failed.len());
    }
    Ok(())
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Format {
    Jsonl,
    Csv,
}

#[derive(Args)]
pub struct IngestArgs {
    /// Tweet file (JSONL or CSV).
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Jsonl)]
    pub format: Format,
    #[arg(long, default_value_t = true, action = ArgAction::Set, value_name = "BOOL")]
    pub trees_grow_on_t3: bool,
    /// Output directory (events.jsonl, progression.csv, hourly.csv, summary.json).
    #[arg(short, long, value_name = "DIR")]
    pub out: PathBuf,
}

pub fn run_ingest(args: IngestArgs) -> Result<()> {
    let file =
        File::open(&args.input).with_context(|| format!("opening {}", args.input.display()))?;
    let format = match args.format {
        Format::Jsonl => InputFormat::Jsonl,
        Format::Csv => InputFormat::Csv,
    };
    let parsed = parse_stream(BufReader::new(file), format)?;
    let outcome = build_progression(
        &parsed,
        StateConfig {
            trees_grow_on_t3: args.trees_grow_on_t3,
        },
    )?;
    let hourly = hourly_stats(&parsed.records, &outcome);
    let summary = IngestSummary {
        counters: outcome.counters,
        events: outcome.events.len() as u64,
        densification_time: outcome.progression.densification_time(),
        final_stats: outcome
            .state
            .time()
            .map(|_| FinalStats::from_metrics(&RunMetrics::from_state(&outcome.state, None))),
    };

    let mut guard = OutputGuard::new();
    guard.ensure_dir(&args.out)?;
    write_events(guard.create(&args.out.join("events.jsonl"))?, &outcome.events)?;
    outcome
        .progression
        .write_csv(guard.create(&args.out.join("progression.csv"))?)?;
    write_hourly_csv(&hourly, guard.create(&args.out.join("hourly.csv"))?)?;
    write_json(guard.create(&args.out.join("summary.json"))?, &summary)?;
    guard.defuse();

    let c = outcome.counters;
    println!(
        "ingested {} records ({} events, {} malformed, {} duplicates) into {}",
        c.parsed,
        outcome.events.len(),
        c.malformed_lines,
        c.duplicate_tweet_ids,
        args.out.display()
    );
    Ok(())
}

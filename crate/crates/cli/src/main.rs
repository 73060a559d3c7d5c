//! `fjnet` — simulate acyclic fork-join networks, estimate the cycle
//! time, compute analytic bounds on it, and verify the algebra the
//! bounds rest on.
//!
//! Subcommands:
//! * `simulate <spec.json>` — seeded replications of the departure
//!   recurrence; reports the cycle-time estimate.
//! * `bounds <spec.json>` — lower/upper cycle-time bounds, the
//!   expectation-matrix sandwich, and the limit-matrix estimate.
//! * `verify` — the randomized property suite; exit 1 on any violation.
//!
//! Exit codes: 0 success, 1 property failure, 2 usage or I/O error.
//! Reports are JSON on stdout (and `--out`); with a fixed seed and
//! config the numeric content is identical across runs and worker-thread
//! counts (only the timestamp field varies).

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use fjnet::analysis::{
    bounds_report, estimate_cycle_time, BoundsConfig, BoundsReport, CycleTimeEstimate,
    SimulationConfig,
};
use fjnet::dynamics::run_trajectory;
use fjnet::network::{compile, CompiledNetwork, NetworkSpec};
use fjnet::oracle::{run_suite, OracleConfig};
use fjnet::seeds;
use fjnet::service::ServiceSampler;

/// Environment variable overriding the default seed when `--seed` is not
/// given.
const SEED_ENV: &str = "FJNET_SEED";
const DEFAULT_SEED: u64 = 1;

#[derive(Parser)]
#[command(
    name = "fjnet",
    version,
    about = "Fork-join queueing networks over max-plus algebra: cycle-time simulation, bounds, verification"
)]
struct Cli {
    /// Worker threads for replications and Monte Carlo sampling
    /// (default: all cores). Results do not depend on this value.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the cycle time by seeded simulation of the recurrence.
    Simulate(SimulateArgs),
    /// Compute analytic cycle-time bounds and the matrix sandwich.
    Bounds(BoundsArgs),
    /// Run the randomized algebra property suite.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Network spec (JSON).
    spec: PathBuf,
    /// Epochs per replication.
    #[arg(long, default_value_t = 10_000)]
    horizon: usize,
    /// Independent replications.
    #[arg(long, default_value_t = 32)]
    replications: usize,
    /// Master seed (default: $FJNET_SEED, then 1).
    #[arg(long)]
    seed: Option<u64>,
    /// Confidence level for the interval.
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,
    /// Initial departure vector: a single value broadcast to every node,
    /// or one comma-separated value per node. Default all zeros.
    #[arg(long)]
    x0: Option<String>,
    /// Also write the report JSON to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a per-epoch CSV (epoch, norm, rate) of the first
    /// replication's trajectory.
    #[arg(long)]
    trace_csv: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    /// Network spec (JSON).
    spec: PathBuf,
    /// Monte Carlo samples for the expectation matrix.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// Master seed (default: $FJNET_SEED, then 1).
    #[arg(long)]
    seed: Option<u64>,
    /// Epochs per replication for the embedded cycle-time estimate.
    #[arg(long, default_value_t = 10_000)]
    horizon: usize,
    /// Replications for the embedded cycle-time estimate.
    #[arg(long, default_value_t = 32)]
    replications: usize,
    /// Horizon for the limit-matrix estimate.
    #[arg(long, default_value_t = 4000)]
    limit_horizon: usize,
    /// Replications for the limit-matrix estimate.
    #[arg(long, default_value_t = 32)]
    limit_replications: usize,
    /// Also write the report JSON to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Instances per property family.
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    /// Master seed (default: $FJNET_SEED, then 1).
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the summary JSON to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Append a deliberately failing check to exercise the failure path.
    #[arg(long, hide = true)]
    inject_failure: bool,
}

#[derive(Serialize)]
struct NetworkInfo {
    nodes: usize,
    longest_path: usize,
    arcs: usize,
    in_degree: Vec<usize>,
    out_degree: Vec<usize>,
    fingerprint: u64,
}

impl NetworkInfo {
    fn new(spec: &NetworkSpec, net: &CompiledNetwork) -> Self {
        NetworkInfo {
            nodes: net.node_count(),
            longest_path: net.longest_path(),
            arcs: spec.arcs().len(),
            in_degree: net.in_degree().to_vec(),
            out_degree: net.out_degree().to_vec(),
            fingerprint: net.fingerprint(),
        }
    }
}

/// The report document. The timestamp is the only field excluded from
/// the determinism contract.
#[derive(Serialize)]
struct RunReport {
    schema: &'static str,
    timestamp_unix: u64,
    config: serde_json::Value,
    network: NetworkInfo,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<CycleTimeEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bounds: Option<BoundsReport>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Bounds(args) => cmd_bounds(args),
        Command::Verify(args) => cmd_verify(args),
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV) {
        Ok(text) => text
            .parse()
            .with_context(|| format!("{SEED_ENV} must be an unsigned integer, got {text:?}")),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn load_network(path: &Path) -> Result<(NetworkSpec, CompiledNetwork)> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read spec file {}", path.display()))?;
    let spec = NetworkSpec::from_json_str(&text)
        .with_context(|| format!("invalid network spec {}", path.display()))?;
    let net = compile(&spec).context("compiling the network")?;
    Ok((spec, net))
}

fn parse_start_vector(text: &str, nodes: usize) -> Result<Vec<f64>> {
    let values: Vec<f64> = text
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .with_context(|| format!("bad x0 component {part:?}"))
        })
        .collect::<Result<_>>()?;
    if values.iter().any(|v| !v.is_finite()) {
        bail!("x0 must be finite in every coordinate");
    }
    match values.len() {
        1 => Ok(vec![values[0]; nodes]),
        len if len == nodes => Ok(values),
        len => bail!("x0 has {len} components, network has {nodes} nodes"),
    }
}

fn timestamp_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn emit(report_json: &str, out: Option<&Path>) -> Result<()> {
    println!("{report_json}");
    if let Some(path) = out {
        std::fs::write(path, format!("{report_json}\n"))
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode> {
    let seed = resolve_seed(args.seed)?;
    let (spec, net) = load_network(&args.spec)?;
    let start = match &args.x0 {
        Some(text) => Some(parse_start_vector(text, net.node_count())?),
        None => None,
    };

    let sim = SimulationConfig {
        horizon: args.horizon,
        replications: args.replications,
        seed,
        confidence: args.confidence,
        start: start.clone(),
    };
    let gamma = estimate_cycle_time(&net, spec.services(), &sim)?;

    if let Some(csv_path) = &args.trace_csv {
        write_trace_csv(csv_path, &net, &spec, &sim)?;
    }

    let config = serde_json::json!({
        "command": "simulate",
        "spec": args.spec.display().to_string(),
        "horizon": args.horizon,
        "replications": args.replications,
        "seed": seed,
        "confidence": args.confidence,
        "x0": start,
    });
    let report = RunReport {
        schema: "fjnet.report.v1",
        timestamp_unix: timestamp_unix(),
        config,
        network: NetworkInfo::new(&spec, &net),
        gamma: Some(gamma),
        bounds: None,
    };
    emit(&serde_json::to_string_pretty(&report)?, args.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

/// Replays the first replication and writes its per-epoch norms.
fn write_trace_csv(
    path: &Path,
    net: &CompiledNetwork,
    spec: &NetworkSpec,
    sim: &SimulationConfig,
) -> Result<()> {
    let rep_seed = seeds::derive(sim.seed, seeds::DOMAIN_REPLICATION, 0);
    let mut sampler = ServiceSampler::new(spec.services(), rep_seed)?;
    let start = sim
        .start
        .clone()
        .unwrap_or_else(|| vec![0.0; net.node_count()]);
    let trajectory = run_trajectory(net, &mut sampler, sim.horizon, &start)?;
    let mut csv = String::from("epoch,norm,rate\n");
    for k in 1..=trajectory.horizon() {
        csv.push_str(&format!(
            "{k},{},{}\n",
            trajectory.norm_at(k),
            trajectory.rate_at(k)
        ));
    }
    std::fs::write(path, csv).with_context(|| format!("cannot write {}", path.display()))
}

fn cmd_bounds(args: BoundsArgs) -> Result<ExitCode> {
    let seed = resolve_seed(args.seed)?;
    let (spec, net) = load_network(&args.spec)?;

    let sim = SimulationConfig {
        horizon: args.horizon,
        replications: args.replications,
        seed,
        ..Default::default()
    };
    let gamma = estimate_cycle_time(&net, spec.services(), &sim)?;
    let bounds_cfg = BoundsConfig {
        samples: args.samples,
        seed,
        limit_horizon: args.limit_horizon,
        limit_replications: args.limit_replications,
        ..Default::default()
    };
    let bounds = bounds_report(&net, spec.services(), &gamma, &bounds_cfg)?;

    let config = serde_json::json!({
        "command": "bounds",
        "spec": args.spec.display().to_string(),
        "samples": args.samples,
        "seed": seed,
        "horizon": args.horizon,
        "replications": args.replications,
        "limit_horizon": args.limit_horizon,
        "limit_replications": args.limit_replications,
    });
    let report = RunReport {
        schema: "fjnet.report.v1",
        timestamp_unix: timestamp_unix(),
        config,
        network: NetworkInfo::new(&spec, &net),
        gamma: Some(gamma),
        bounds: Some(bounds),
    };
    emit(&serde_json::to_string_pretty(&report)?, args.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    let seed = resolve_seed(args.seed)?;
    let summary = run_suite(
        args.trials as usize,
        seed,
        &OracleConfig::default(),
        args.inject_failure,
    )?;
    emit(&serde_json::to_string_pretty(&summary)?, args.out.as_deref())?;
    if summary.all_passed {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

//! `migsim`: run scenarios, dump partition reachability, forecast traces,
//! and generate synthetic traces. Log level comes from `MIGSIM_LOG`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use migsim::catalog::PlacementCatalog;
use migsim::predictor::{ForecastConfig, MemoryForecast, StaticOverheads};
use migsim::report::{event_log_to_jsonl, NormalizedVsBaseline};
use migsim::scheduler::{PolicyKind, SchedulingPolicy};
use migsim::sim::SimError;
use migsim::trace::{self, TraceGenParams};
use migsim::{run_scenario_logged, Scenario, SimInput};

#[derive(Parser)]
#[command(name = "migsim", version, about = "MIG partition scheduling simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write a report.
    Simulate(SimulateArgs),
    /// Dump all valid partition states, alloc edges, and fcr as JSON.
    Reachability(ReachabilityArgs),
    /// Stream a trace CSV through the peak-memory forecaster.
    Predict(PredictArgs),
    /// Generate a synthetic trace CSV.
    GenTrace(GenTraceArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Baseline,
    A,
    B,
}

impl From<PolicyArg> for PolicyKind {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Baseline => PolicyKind::Baseline,
            PolicyArg::A => PolicyKind::SchemeA,
            PolicyArg::B => PolicyKind::SchemeB,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario JSON file.
    scenario: PathBuf,
    /// Override the scenario's scheduling policy.
    #[arg(long, value_enum)]
    policy: Option<PolicyArg>,
    /// Force prediction-driven early restarts on.
    #[arg(long, conflicts_with = "no_predict")]
    predict: bool,
    /// Force prediction-driven early restarts off.
    #[arg(long)]
    no_predict: bool,
    /// Override the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Catalog file overriding the scenario's choice.
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Report path (default: `<scenario stem>.report.json`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the aggregate metrics table as CSV.
    #[arg(long)]
    csv: bool,
    /// Also write the event log as JSON Lines.
    #[arg(long)]
    events: bool,
}

#[derive(Args)]
struct ReachabilityArgs {
    /// Catalog file (default: bundled A100 40GB).
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Write the dump here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Abort if the catalog admits more states than this.
    #[arg(long, default_value_t = migsim::fsm::DEFAULT_STATE_CAP)]
    state_cap: usize,
}

#[derive(Args)]
struct PredictArgs {
    /// Trace CSV file (`iteration,requested_bytes,reuse_ratio`).
    trace: PathBuf,
    #[arg(long, default_value_t = migsim::predictor::DEFAULT_Z)]
    z: f64,
    #[arg(long, default_value_t = migsim::predictor::DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = migsim::predictor::DEFAULT_K)]
    k: usize,
    #[arg(long, default_value_t = migsim::predictor::DEFAULT_N_MIN)]
    n_min: usize,
    /// Prediction horizon; defaults to the trace length or `--horizon`,
    /// whichever is larger.
    #[arg(long)]
    max_iter: Option<u32>,
    /// Fallback horizon when `--max-iter` is absent.
    #[arg(long, default_value_t = migsim::predictor::DEFAULT_HORIZON)]
    horizon: u32,
    /// Fixed CUDA-context bytes added to the forecast.
    #[arg(long, default_value_t = 0)]
    context_bytes: u64,
    /// Workspace config string, e.g. ":4096:8" or ":4096:2,:16:8".
    #[arg(long, default_value = "")]
    workspace_config: String,
    /// Model layer count multiplying the workspace config.
    #[arg(long, default_value_t = 1)]
    layers: u64,
    /// Write the forecast JSON here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenTraceArgs {
    /// Requested-memory slope in bytes per iteration.
    #[arg(long)]
    a: f64,
    /// Requested-memory intercept in bytes.
    #[arg(long)]
    b: f64,
    /// Gaussian noise on requested memory, bytes.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    /// Inverse-reuse slope per iteration.
    #[arg(long, default_value_t = 0.0)]
    inv_a: f64,
    /// Inverse-reuse intercept.
    #[arg(long, default_value_t = 1.0)]
    inv_b: f64,
    /// Number of iterations.
    #[arg(long)]
    n: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MIGSIM_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Reachability(args) => reachability(args),
        Command::Predict(args) => predict(args),
        Command::GenTrace(args) => gen_trace(args),
    };
    match result {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = if err.downcast_ref::<SimError>().is_some() { 2 } else { 1 };
            std::process::exit(code);
        }
    }
}

fn write_output(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let scenario = Scenario::load(&args.scenario)
        .with_context(|| format!("loading scenario {}", args.scenario.display()))?;
    let base_dir = args.scenario.parent().map(Path::to_path_buf);
    let catalog_override = match &args.catalog {
        Some(path) => Some(Arc::new(
            PlacementCatalog::load(path)
                .with_context(|| format!("loading catalog {}", path.display()))?,
        )),
        None => None,
    };
    let mut policy: SchedulingPolicy = scenario.policy.into();
    if let Some(kind) = args.policy {
        policy.kind = kind.into();
    }
    if args.predict {
        policy.prediction_enabled = true;
    }
    if args.no_predict {
        policy.prediction_enabled = false;
    }
    let paired = scenario.paired_baseline;
    let input = SimInput::prepare(scenario, base_dir.as_deref(), catalog_override, args.seed)?;

    log::info!("running {} under {}", args.scenario.display(), policy.kind.as_str());
    let (mut report, events) = run_scenario_logged(&input, policy)?;
    if paired && policy.kind != PolicyKind::Baseline {
        let baseline = SchedulingPolicy { kind: PolicyKind::Baseline, prediction_enabled: false };
        let (base_report, _) = run_scenario_logged(&input, baseline)?;
        report.normalized =
            NormalizedVsBaseline::compute(&report.metrics, &base_report.metrics);
        report.baseline_metrics = Some(base_report.metrics);
    }

    let stem = args
        .scenario
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".to_string());
    let out = args.out.unwrap_or_else(|| PathBuf::from(format!("{stem}.report.json")));
    write_output(&out, &report.to_json_string())?;
    if args.csv {
        write_output(&out.with_extension("csv"), &report.metrics_csv())?;
    }
    if args.events {
        write_output(&out.with_extension("events.jsonl"), &event_log_to_jsonl(&events))?;
    }

    let m = &report.metrics;
    println!(
        "{} on {}: policy={} prediction={} seed={}",
        stem,
        report.gpu_name,
        report.policy,
        if report.prediction_enabled { "on" } else { "off" },
        report.seed
    );
    println!(
        "  completed {}/{} jobs | makespan {:.3} s | throughput {:.6} jobs/s | energy {:.1} J",
        m.completed_jobs,
        report.jobs.len(),
        m.makespan_s,
        m.throughput_jobs_per_s,
        m.energy_joules
    );
    println!(
        "  mem utilization {:.4} | mean turnaround {:.3} s | reconfigurations {} | wasted iterations {}",
        m.mean_mem_utilization, m.mean_turnaround_s, m.reconfigurations, m.total_wasted_iterations
    );
    if let Some(n) = &report.normalized {
        println!(
            "  vs baseline: throughput x{:.3} | energy x{:.3} | utilization x{:.3} | turnaround x{:.3}",
            n.throughput_ratio, n.energy_improvement, n.mem_utilization_ratio,
            n.turnaround_improvement
        );
    }
    println!("  report: {}", out.display());
    Ok(())
}

#[derive(Serialize)]
struct DumpInstance {
    profile: String,
    start_slot: u32,
}

#[derive(Serialize)]
struct DumpState {
    index: usize,
    instances: Vec<DumpInstance>,
    fcr: u64,
    is_final: bool,
}

#[derive(Serialize)]
struct DumpEdge {
    from: usize,
    profile: String,
    start_slot: u32,
    to: usize,
}

#[derive(Serialize)]
struct ReachabilityDump {
    gpu_name: String,
    total_states: usize,
    total_finals: usize,
    states: Vec<DumpState>,
    alloc_edges: Vec<DumpEdge>,
}

fn reachability(args: ReachabilityArgs) -> Result<()> {
    let catalog = match &args.catalog {
        Some(path) => Arc::new(
            PlacementCatalog::load(path)
                .with_context(|| format!("loading catalog {}", path.display()))?,
        ),
        None => PlacementCatalog::a100_40gb(),
    };
    let mut table = migsim::fsm::enumerate_states(Arc::clone(&catalog), args.state_cap)?;
    table.precompute_reachability();
    let states = (0..table.len())
        .map(|idx| DumpState {
            index: idx,
            instances: table
                .state(idx)
                .instances()
                .iter()
                .map(|i| DumpInstance {
                    profile: catalog.profile(i.profile_idx).name.clone(),
                    start_slot: i.start_slot,
                })
                .collect(),
            fcr: table.fcr(idx),
            is_final: table.is_final(idx),
        })
        .collect();
    let alloc_edges = (0..table.len())
        .flat_map(|idx| {
            let catalog = &catalog;
            let table = &table;
            table.alloc_edges(idx).iter().map(move |e| DumpEdge {
                from: idx,
                profile: catalog.profile(e.profile_idx).name.clone(),
                start_slot: e.start_slot,
                to: e.successor,
            })
        })
        .collect();
    let dump = ReachabilityDump {
        gpu_name: catalog.gpu_name.clone(),
        total_states: table.len(),
        total_finals: table.final_count(),
        states,
        alloc_edges,
    };
    let mut text = serde_json::to_string_pretty(&dump)?;
    text.push('\n');
    match &args.out {
        Some(path) => write_output(path, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct ForecastOutput {
    samples: u32,
    converged: bool,
    converged_at: Option<u32>,
    mem_model: Option<migsim::predictor::TrendModel>,
    inv_reuse_model: Option<migsim::predictor::TrendModel>,
    peak_prediction_bytes: f64,
    history: Vec<f64>,
    config: ForecastConfig,
}

fn predict(args: PredictArgs) -> Result<()> {
    let samples = trace::load_trace(&args.trace)
        .with_context(|| format!("loading trace {}", args.trace.display()))?;
    let workspace_bytes =
        migsim::predictor::estimate_workspace(&args.workspace_config, args.layers)?;
    let max_iter = args
        .max_iter
        .unwrap_or_else(|| args.horizon.max(samples.len() as u32));
    let config = ForecastConfig {
        z: args.z,
        epsilon: args.epsilon,
        k: args.k,
        n_min: args.n_min,
        max_iter,
        overheads: StaticOverheads {
            workspace_bytes,
            context_bytes: args.context_bytes,
        },
    };
    let mut forecast = MemoryForecast::new(config);
    for sample in &samples {
        forecast.step(*sample)?;
    }
    let output = ForecastOutput {
        samples: samples.len() as u32,
        converged: forecast.converged,
        converged_at: forecast.converged_at(),
        mem_model: forecast.mem_model,
        inv_reuse_model: forecast.inv_reuse_model,
        peak_prediction_bytes: forecast.peak_prediction_bytes,
        history: forecast.history.clone(),
        config,
    };
    let mut text = serde_json::to_string_pretty(&output)?;
    text.push('\n');
    match &args.out {
        Some(path) => write_output(path, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn gen_trace(args: GenTraceArgs) -> Result<()> {
    let params = TraceGenParams {
        a: args.a,
        b: args.b,
        sigma: args.sigma,
        inv_a: args.inv_a,
        inv_b: args.inv_b,
        n: Some(args.n),
        seed: args.seed,
    };
    let samples = trace::gen_trace(&params, args.n);
    write_output(&args.out, &trace::trace_to_csv(&samples))?;
    println!("wrote {} samples to {}", samples.len(), args.out.display());
    Ok(())
}

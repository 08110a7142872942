use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use redalloc::analysis::{analyze, di_csv};
use redalloc::config::FileFormat;
use redalloc::experiment::{cdf_csv, order_csv, order_study, run_experiment, sweep_csv, threshold_sweep, Summary};
use redalloc::format::NodeDefaults;
use redalloc::par::{dependency_profile, simulate};
use redalloc::tiny::run_oracle;
use redalloc::{AllocationPlan, HarnessError, ScenarioConfig};
use redalloc_core::montecarlo::SimConfig;
use redalloc_core::OrderPolicy;

#[derive(Parser)]
#[command(name = "redalloc", version, about = "Backup NF instance planning for service chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dependency indices and correlated sets of a topology.
    AnalyzeTopology(AnalyzeArgs),
    /// Allocate primaries and backups for one run of a scenario.
    Plan(PlanArgs),
    /// Monte Carlo availability of a saved plan.
    Simulate(SimulateArgs),
    /// Exact minimum backup count for a tiny scenario.
    Oracle(OracleArgs),
    /// Threshold sweep, or assignment-order study with --orders.
    Sweep(SweepArgs),
    /// Summarize saved plans, or run every configured repetition.
    Report(ReportArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Scenario config whose topology is analyzed.
    #[arg(long, conflicts_with = "topology", required_unless_present = "topology")]
    config: Option<PathBuf>,
    /// Topology file; `.json` is a network document, `.weights` a weights file.
    #[arg(long)]
    topology: Option<PathBuf>,
    /// Overrides the config threshold.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    depth: Option<u32>,
    /// Write the `i,n,di` table here.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write per-node sets here instead of stdout.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct PlanArgs {
    config: PathBuf,
    #[arg(long, default_value_t = 0)]
    run: u32,
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Write the backup demand as JSON.
    #[arg(long)]
    emit_estimates: Option<PathBuf>,
    /// Write hosted backups per node; CSV when the name ends in `.csv`.
    #[arg(long)]
    emit_placement: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    plan: PathBuf,
    #[arg(long, default_value_t = 1_000_000)]
    replications: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    contention_aware: bool,
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Write the unavailability CDF as CSV.
    #[arg(long)]
    cdf: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    config: PathBuf,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    config: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])]
    thresholds: Vec<f64>,
    /// Comma-separated assignment orders, e.g. `input,avail_desc`.
    #[arg(long, value_delimiter = ',')]
    orders: Vec<String>,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Saved plan files.
    #[arg(required_unless_present = "config")]
    plans: Vec<PathBuf>,
    /// Run the scenario instead and report every repetition.
    #[arg(long, conflicts_with = "plans")]
    config: Option<PathBuf>,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), HarnessError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| HarnessError::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: serde::Serialize>(value: &T) -> Result<String, HarnessError> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn load_plan(path: &Path) -> Result<AllocationPlan, HarnessError> {
    Ok(serde_json::from_str(&read(path)?)?)
}

fn analyze_topology(a: AnalyzeArgs) -> Result<(), HarnessError> {
    let (net, mut threshold, mut depth) = match (&a.config, &a.topology) {
        (Some(path), _) => {
            let (config, base) = ScenarioConfig::load(path)?;
            (config.base_network(&base)?, config.threshold, config.depth)
        }
        (None, Some(path)) => {
            let net = FileFormat::from_path(path).parse(&read(path)?, &NodeDefaults::default())?;
            let d = ScenarioConfig::default();
            (net, d.threshold, d.depth)
        }
        (None, None) => unreachable!("clap requires one source"),
    };
    threshold = a.threshold.unwrap_or(threshold);
    depth = a.depth.unwrap_or(depth);
    let profile = dependency_profile(&net, threshold, depth)?;
    if let Some(p) = &a.csv {
        emit(Some(p), &di_csv(&net, &profile))?;
    }
    emit(a.json.as_deref(), &json(&analyze(&net, &profile))?)
}

fn plan(a: PlanArgs) -> Result<(), HarnessError> {
    let (config, base) = ScenarioConfig::load(&a.config)?;
    config.validate()?;
    let scenario = config.scenario(&base, a.run)?;
    let plan = redalloc::plan::allocate(&config, &scenario)?;
    if let Some(p) = &a.emit_estimates {
        emit(Some(p), &json(&plan.demand)?)?;
    }
    if let Some(p) = &a.emit_placement {
        let text = if p.extension().is_some_and(|e| e == "csv") {
            plan.backups_csv()
        } else {
            json(&plan.backups_by_node())?
        };
        emit(Some(p), &text)?;
    }
    emit(a.out.as_deref(), &json(&plan)?)
}

fn simulate_plan(a: SimulateArgs) -> Result<(), HarnessError> {
    let plan = load_plan(&a.plan)?;
    let config = SimConfig {
        replications: a.replications,
        seed: a.seed,
        contention_aware: a.contention_aware,
    };
    let report = simulate(&plan.sim_plan(), &config);
    if let Some(p) = &a.cdf {
        emit(Some(p), &cdf_csv(&report))?;
    }
    emit(a.out.as_deref(), &json(&report)?)
}

fn oracle(a: OracleArgs) -> Result<(), HarnessError> {
    let (config, base) = ScenarioConfig::load(&a.config)?;
    emit(a.out.as_deref(), &json(&run_oracle(&config, &base)?)?)
}

fn sweep(a: SweepArgs) -> Result<(), HarnessError> {
    let (config, base) = ScenarioConfig::load(&a.config)?;
    let text = if a.orders.is_empty() {
        sweep_csv(&threshold_sweep(&config, &base, &a.thresholds)?)
    } else {
        let orders = a
            .orders
            .iter()
            .map(|o| {
                serde_json::from_value::<OrderPolicy>(serde_json::Value::String(o.clone()))
                    .map_err(|_| HarnessError::Config(format!("unknown order {o:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        order_csv(&order_study(&config, &base, &orders)?)
    };
    emit(a.out.as_deref(), &text)
}

fn report(a: ReportArgs) -> Result<(), HarnessError> {
    let text = match &a.config {
        Some(path) => {
            let (config, base) = ScenarioConfig::load(path)?;
            json(&run_experiment(&config, &base)?)?
        }
        None => {
            let plans = a.plans.iter().map(|p| load_plan(p)).collect::<Result<Vec<_>, _>>()?;
            json(&Summary::of(&plans.iter().collect::<Vec<_>>()))?
        }
    };
    emit(a.out.as_deref(), &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::AnalyzeTopology(a) => analyze_topology(a),
        Command::Plan(a) => plan(a),
        Command::Simulate(a) => simulate_plan(a),
        Command::Oracle(a) => oracle(a),
        Command::Sweep(a) => sweep(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

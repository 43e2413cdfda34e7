//! `swapplan` — plan battery swaps for multi-UAV waypoint missions.
//!
//! Subcommands: `generate` a random scenario, `import` mission-plan files
//! into a scenario, `plan` the swaps, `report` a plan as tables and CSV.
//!
//! Exit codes: 0 success, 2 invalid input, 3 no feasible plan, 4 search
//! timeout, 5 plan failed validation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use swapplan_core::actions;
use swapplan_core::planner::{self, PlanError};
use swapplan_core::report;
use swapplan_core::scenario::{
    self, qgc, ImportParams, PlannerConfig, RandomScenarioParams, ScenarioError,
};

/// Directory used for outputs when a path flag is omitted.
const OUT_DIR_ENV: &str = "SWAPPLAN_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "swapplan",
    version,
    about = "Plan when and where each UAV swaps its battery to finish its mission"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a randomized scenario document.
    Generate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        uavs: usize,
        #[arg(long, default_value_t = 5)]
        stations: usize,
        /// Charged batteries per station.
        #[arg(long, default_value_t = 10)]
        batteries: usize,
        /// Waypoints per mission.
        #[arg(long, default_value_t = 50)]
        waypoints: usize,
        /// Charge floor override.
        #[arg(long)]
        min_soc: Option<f64>,
        /// Detour-time pruning cap, seconds.
        #[arg(long, value_name = "SECONDS")]
        detour_cap: Option<f64>,
        /// Output scenario path (default: scenario.json).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write a reproducibility manifest here.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Build a scenario from QGroundControl .plan files plus a parameter file.
    Import {
        /// Mission-plan files, one per UAV.
        #[arg(required = true)]
        plans: Vec<PathBuf>,
        /// Parameter document: UAV defaults, stations, planner config.
        #[arg(long)]
        params: PathBuf,
        /// Uniform UAV speed override, m/s.
        #[arg(long)]
        speed: Option<f64>,
        /// Uniform full-charge endurance override, seconds.
        #[arg(long)]
        flight_time: Option<f64>,
        /// Uniform initial charge override.
        #[arg(long)]
        initial_soc: Option<f64>,
        /// Output scenario path (default: scenario.json).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Search for the minimum-consumption swap plan of a scenario.
    Plan {
        scenario: PathBuf,
        /// Charge floor override.
        #[arg(long)]
        min_soc: Option<f64>,
        /// Detour-time pruning cap override, seconds.
        #[arg(long, value_name = "SECONDS")]
        detour_cap: Option<f64>,
        /// Wall-clock search budget, seconds.
        #[arg(long, value_name = "SECONDS")]
        timeout: Option<f64>,
        /// Output plan path (default: plan.json).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write search statistics here as JSON.
        #[arg(long)]
        stats: Option<PathBuf>,
        /// Dump the priced action tensor here as CSV.
        #[arg(long)]
        dump_tensor: Option<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Replay and validate a plan, writing tables, CSV, and a summary.
    Report {
        scenario: PathBuf,
        plan: PathBuf,
        /// Output directory (default: report/).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
}

enum CliError {
    /// Bad input: parse or validation failures, unusable files.
    Invalid(String),
    Infeasible,
    Timeout(f64),
    Violation(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Infeasible => 3,
            CliError::Timeout(_) => 4,
            CliError::Violation(_) => 5,
            CliError::Io(_) => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Invalid(m) => format!("invalid input: {m}"),
            CliError::Infeasible => "no feasible replacement plan exists".to_string(),
            CliError::Timeout(s) => format!("search exceeded its {s} s budget"),
            CliError::Violation(m) => format!("plan failed validation: {m}"),
            CliError::Io(m) => m.clone(),
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<PlanError> for CliError {
    fn from(e: PlanError) -> Self {
        match e {
            PlanError::Infeasible => CliError::Infeasible,
            PlanError::Timeout(s) => CliError::Timeout(s),
            PlanError::Scenario(se) => se.into(),
            PlanError::Energy(ee) => CliError::Invalid(ee.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("swapplan: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Generate {
            seed,
            uavs,
            stations,
            batteries,
            waypoints,
            min_soc,
            detour_cap,
            out,
            manifest,
        } => {
            let mut params = RandomScenarioParams {
                n_uavs: uavs,
                n_stations: stations,
                batteries_per_station: batteries,
                waypoints_per_mission: waypoints,
                ..RandomScenarioParams::default()
            };
            if let Some(m) = min_soc {
                params.config.min_soc = m;
            }
            if detour_cap.is_some() {
                params.config.detour_time_cap = detour_cap;
            }
            let scenario = scenario::generate_random_scenario(seed, &params)?;
            let out = resolve_out(out, "scenario.json");
            write_text(&out, &scenario::scenario_to_json(&scenario))?;
            println!("wrote scenario with {uavs} UAVs and {stations} stations to {}", out.display());
            write_manifest(
                manifest,
                "generate",
                Some(seed),
                &[],
                &[out],
            )
        }
        Cmd::Import {
            plans,
            params,
            speed,
            flight_time,
            initial_soc,
            out,
            manifest,
        } => {
            let params_text = std::fs::read_to_string(&params)?;
            let mut import: ImportParams = serde_json::from_str(&params_text)
                .map_err(|e| CliError::Invalid(format!("{}: {e}", params.display())))?;
            if speed.is_some() {
                import.uav_defaults.speed_mps = speed;
            }
            if flight_time.is_some() {
                import.uav_defaults.max_flight_time_s = flight_time;
            }
            if initial_soc.is_some() {
                import.uav_defaults.initial_soc = initial_soc;
            }
            let mut parsed = Vec::with_capacity(plans.len());
            for path in &plans {
                let contents = std::fs::read_to_string(path)?;
                let plan = qgc::parse_mission_plan(&contents)
                    .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
                let name = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| path.display().to_string());
                parsed.push((name, plan));
            }
            let scenario = scenario::import_mission_plans(&parsed, &import)?;
            let out = resolve_out(out, "scenario.json");
            write_text(&out, &scenario::scenario_to_json(&scenario))?;
            println!(
                "imported {} missions into {}",
                parsed.len(),
                out.display()
            );
            let mut inputs = plans;
            inputs.push(params);
            write_manifest(manifest, "import", None, &inputs, &[out])
        }
        Cmd::Plan {
            scenario: scenario_path,
            min_soc,
            detour_cap,
            timeout,
            out,
            stats,
            dump_tensor,
            manifest,
        } => {
            let mut scenario = scenario::load_scenario(&scenario_path)?;
            apply_overrides(&mut scenario.config, min_soc, detour_cap, timeout);
            if let Some(path) = dump_tensor {
                let tensor = actions::precompute(&scenario)
                    .map_err(|e| CliError::Invalid(e.to_string()))?;
                write_text(&path, &tensor.to_csv())?;
            }
            let (plan, search_stats) = planner::plan(&scenario)?;
            let out = resolve_out(out, "plan.json");
            write_text(&out, &to_pretty_json(&plan))?;
            println!(
                "plan: {} replacements, total SoC cost {:.6}; expanded {} vertices in {:.2} s",
                plan.actions.len(),
                plan.total_soc_cost,
                search_stats.expanded,
                search_stats.wall_time
            );
            println!("wrote {}", out.display());
            if let Some(stats_path) = stats {
                write_text(&stats_path, &to_pretty_json(&search_stats))?;
            }
            write_manifest(
                manifest,
                "plan",
                None,
                std::slice::from_ref(&scenario_path),
                &[out],
            )
        }
        Cmd::Report {
            scenario: scenario_path,
            plan: plan_path,
            out_dir,
            manifest,
        } => {
            let scenario = scenario::load_scenario(&scenario_path)?;
            let plan_text = std::fs::read_to_string(&plan_path)?;
            let plan: swapplan_core::model::Plan = serde_json::from_str(&plan_text)
                .map_err(|e| CliError::Invalid(format!("{}: {e}", plan_path.display())))?;
            let timelines = report::simulate(&scenario, &plan)
                .map_err(|e| CliError::Violation(e.to_string()))?;

            let dir = resolve_out(out_dir, "report");
            std::fs::create_dir_all(&dir)?;
            let files = [
                ("action_table.txt", report::action_table(&plan)),
                ("schedule_table.txt", report::schedule_table(&plan)),
                ("soc_timelines.csv", report::soc_csv(&timelines)),
                ("summary.json", to_pretty_json(&report::summarize(&plan))),
            ];
            let mut outputs = Vec::new();
            for (name, contents) in files {
                let path = dir.join(name);
                write_text(&path, &contents)?;
                outputs.push(path);
            }
            println!("wrote {} report files to {}", outputs.len(), dir.display());
            write_manifest(
                manifest,
                "report",
                None,
                &[scenario_path, plan_path],
                &outputs,
            )
        }
    }
}

fn apply_overrides(
    config: &mut PlannerConfig,
    min_soc: Option<f64>,
    detour_cap: Option<f64>,
    timeout: Option<f64>,
) {
    if let Some(m) = min_soc {
        config.min_soc = m;
    }
    if detour_cap.is_some() {
        config.detour_time_cap = detour_cap;
    }
    if timeout.is_some() {
        config.timeout = timeout;
    }
}

/// Resolve an output path: explicit flags win, otherwise the default name
/// under `SWAPPLAN_OUT_DIR` (or the working directory).
fn resolve_out(flag: Option<PathBuf>, default_name: &str) -> PathBuf {
    match flag {
        Some(p) => p,
        None => match std::env::var_os(OUT_DIR_ENV) {
            Some(dir) => Path::new(&dir).join(default_name),
            None => PathBuf::from(default_name),
        },
    }
}

fn write_text(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, contents)?;
    Ok(())
}

fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct ManifestFile {
    path: String,
    sha256: String,
}

/// Everything needed to reproduce a run byte-for-byte: the exact
/// invocation, the tool version, and content hashes of inputs and outputs.
#[derive(Serialize)]
struct RunManifest {
    command: String,
    invocation: Vec<String>,
    tool_version: String,
    seed: Option<u64>,
    inputs: Vec<ManifestFile>,
    outputs: Vec<ManifestFile>,
    unix_time_s: u64,
}

fn write_manifest(
    path: Option<PathBuf>,
    command: &str,
    seed: Option<u64>,
    inputs: &[PathBuf],
    outputs: &[PathBuf],
) -> Result<(), CliError> {
    let Some(path) = path else {
        return Ok(());
    };
    let hash_all = |paths: &[PathBuf]| -> Result<Vec<ManifestFile>, CliError> {
        paths
            .iter()
            .map(|p| {
                let bytes = std::fs::read(p)?;
                Ok(ManifestFile {
                    path: p.display().to_string(),
                    sha256: hex::encode(Sha256::digest(&bytes)),
                })
            })
            .collect()
    };
    let manifest = RunManifest {
        command: command.to_string(),
        invocation: std::env::args().collect(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        inputs: hash_all(inputs)?,
        outputs: hash_all(outputs)?,
        unix_time_s: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    write_text(&path, &to_pretty_json(&manifest))
}

//! `emsq`: ambulance fleet queue analytics from the command line.

// `!(x > 0.0)` is how NaN gets rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use crate::config::{ScenarioConfig, Servers};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "emsq", version, about = "M-server ambulance queue analytics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Steady-state report per fleet size (report.json, metrics_by_fleet.csv).
    Analyze(AnalyzeArgs),
    /// Mean time to saturation (mfpt.json, mfpt_sweep.csv).
    Mfpt(MfptArgs),
    /// Smallest fleet meeting a target (sizing.json).
    Size(SizeArgs),
    /// Monte-Carlo estimates (sim.json).
    Simulate(SimulateArgs),
}

/// Flags shared by every command; they override the config file.
#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Scenario JSON file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Mean time between calls, minutes.
    #[arg(long)]
    pub t_call: Option<f64>,
    /// Mean service time, minutes.
    #[arg(long)]
    pub t_service: Option<f64>,
    /// Fleet sizes: `6`, `5,7` or `4..10`.
    #[arg(long)]
    pub servers: Option<String>,
    /// Level-of-service threshold, minutes.
    #[arg(long)]
    pub t_los: Option<f64>,
    /// Cost per attention.
    #[arg(long)]
    pub cost: Option<f64>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Show times in hours on stdout (files stay in minutes).
    #[arg(long)]
    pub hours: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Also write stationary_M{m}.csv for every fleet size.
    #[arg(long)]
    pub stationary_csv: bool,
    /// Extra LOS thresholds (minutes) for los_by_fleet.csv.
    #[arg(long, value_delimiter = ',')]
    pub los_grid: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct MfptArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated T_C values for the sweep.
    #[arg(long, conflicts_with = "t_call_range")]
    pub t_call_grid: Option<String>,
    /// Sweep range `START:END:STEP`, inclusive.
    #[arg(long)]
    pub t_call_range: Option<String>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("criterion").required(true)
    .args(["stability", "occup_max", "los_min", "horizon"])))]
pub struct SizeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Smallest fleet with ρ < 1.
    #[arg(long)]
    pub stability: bool,
    /// Largest acceptable P(occup).
    #[arg(long)]
    pub occup_max: Option<f64>,
    /// Smallest acceptable LOS at --t-los.
    #[arg(long)]
    pub los_min: Option<f64>,
    /// Required ⟨T⟩ to saturation, minutes.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long, default_value_t = emsq::sizing::DEFAULT_M_MAX)]
    pub m_max: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimMode {
    /// FCFS multi-server run in steady state.
    Stationary,
    /// Walks from every start state to saturation.
    Hitting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Random,
    LowestIndex,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value_t = SimMode::Stationary)]
    pub mode: SimMode,
    /// Refuse to run without an explicit seed.
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub replications: Option<u32>,
    #[arg(long)]
    pub warmup: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub start_state: Option<u64>,
    #[arg(long)]
    pub batches: Option<u32>,
    #[arg(long, value_enum)]
    pub policy: Option<PolicyArg>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Add analytic values and z-scores.
    #[arg(long)]
    pub compare: bool,
    /// Run even when ρ ≥ 1.
    #[arg(long)]
    pub allow_unstable: bool,
    /// Write waits.csv with every conditional wait.
    #[arg(long)]
    pub wait_samples: bool,
}

/// Parses `6`, `5,7`, `4..10` or combinations such as `4..6,9`.
pub fn parse_servers(text: &str) -> Result<Vec<u32>, CliError> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || CliError::config(format!("invalid fleet size '{part}' in --servers"));
        if let Some((lo, hi)) = part.split_once("..") {
            let lo: u32 = lo.trim().parse().map_err(|_| bad())?;
            let hi: u32 = hi
                .trim()
                .trim_start_matches('=')
                .parse()
                .map_err(|_| bad())?;
            if hi < lo {
                return Err(bad());
            }
            out.extend(lo..=hi);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    Ok(out)
}

/// Parses a comma-separated list of reals.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| CliError::config(format!("invalid grid value '{p}'")))
        })
        .collect()
}

/// Parses `START:END:STEP` into an inclusive grid.
pub fn parse_range(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::config(format!("invalid range '{text}', expected START:END:STEP"));
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let [start, end, step] = parts[..] else {
        return Err(bad());
    };
    if !(step > 0.0) || end < start || !start.is_finite() || !end.is_finite() {
        return Err(bad());
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

impl CommonArgs {
    /// Loads the config file (if any) and applies command-line overrides.
    pub fn scenario_config(&self) -> Result<ScenarioConfig, CliError> {
        let mut config = match &self.config {
            Some(path) => ScenarioConfig::load(path)?,
            None => ScenarioConfig::default(),
        };
        if let Some(v) = self.t_call {
            config.t_call_min = Some(v);
        }
        if let Some(v) = self.t_service {
            config.t_service_min = Some(v);
        }
        if let Some(text) = &self.servers {
            config.servers = Some(Servers::Many(parse_servers(text)?));
        }
        if let Some(v) = self.t_los {
            config.t_los_min = Some(v);
        }
        if let Some(v) = self.cost {
            config.cost_per_attention = Some(v);
        }
        if let Some(seed) = self.seed {
            config.sim.get_or_insert_with(Default::default).seed = Some(seed);
        }
        Ok(config)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(args) => commands::analyze(&args),
        Command::Mfpt(args) => commands::mfpt(&args),
        Command::Size(args) => commands::size(&args),
        Command::Simulate(args) => commands::simulate(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.code as u8)
        }
    }
}

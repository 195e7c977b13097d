//! `npgrover`: generation, simulation, sweeps and closed forms for Grover
//! search on number partitioning.

mod analyze;
mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use npgrover_core::instances::Postselect;

use crate::config::{parse_rho, FlagError, GammaRuleArg};

#[derive(Parser, Debug)]
#[command(name = "npgrover", version, about = "Grover search with a generalized phase oracle for number partitioning")]
pub struct Cli {
    /// Worker threads; 0 uses one per core. Never changes the results.
    #[arg(long, global = true, env = "NPGROVER_THREADS", default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Draw an ensemble of integer instances (JSON lines).
    Gen(GenArgs),
    /// Standard algorithm on every instance of a file; writes P_T traces.
    Run(RunArgs),
    /// Layered algorithm with a fixed, default or optimized schedule.
    Recursive(RecursiveArgs),
    /// Parameter sweep described by a JSON file.
    Sweep(SweepArgs),
    /// Evaluate a closed-form model on a parameter grid.
    Analyze(analyze::AnalyzeArgs),
    /// Classical guessing baselines.
    Classical(ClassicalArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Run(_) => "run",
            Command::Recursive(_) => "recursive",
            Command::Sweep(_) => "sweep",
            Command::Analyze(_) => "analyze",
            Command::Classical(_) => "classical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
pub struct OutArgs {
    /// Output file; standard output when absent. A manifest is written to
    /// `<out>.manifest.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

fn parse_postselect(s: &str) -> Result<Postselect, String> {
    s.parse().map_err(|e: npgrover_core::Error| e.to_string())
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: u32,
    #[arg(long)]
    pub count: usize,
    #[arg(long)]
    pub seed: u64,
    /// none, any, or count=C
    #[arg(long, default_value = "none", value_parser = parse_postselect)]
    pub postselect: Postselect,
    /// Candidate draws allowed per requested instance.
    #[arg(long, default_value_t = 100)]
    pub attempt_factor: usize,
    /// Output file (JSON lines); standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct OracleArgs {
    /// Oracle step width.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Step width from a rule: fixed (needs --gamma), power-k (2^-k) or crit.
    #[arg(long, value_enum)]
    pub gamma_rule: Option<GammaRuleArg>,
    /// Interaction-to-decay ratio; `inf` for no decay.
    #[arg(long, value_parser = parse_rho)]
    pub rho: Option<f64>,
    /// Decay per query.
    #[arg(long = "r")]
    pub r: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DiffusionArg {
    Ideal,
    Generalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RuleArg {
    /// Minimize the median of T·M(P_T, ε).
    MinTotal,
    /// Maximize the median of P_T.
    MaxProbability,
}

#[derive(Args, Debug, Clone)]
pub struct SimArgs {
    /// Target error ε.
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    /// Apply the oracle the same way on every step.
    #[arg(long)]
    pub no_echo: bool,
    #[arg(long, value_enum, default_value_t = DiffusionArg::Ideal)]
    pub diffusion: DiffusionArg,
    /// Step width of the controlled phase in a generalized diffusion.
    #[arg(long, default_value_t = 0.5)]
    pub gamma_d: f64,
    /// Decay of the generalized diffusion; defaults to 1/(ρ·gamma_d).
    #[arg(long)]
    pub r_d: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OracleKindArg {
    Generalized,
    /// Exact π phase on solutions; step width and decay are ignored.
    Ideal,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Instance file (JSON lines, all with the same n and k).
    #[arg(long)]
    pub instances: PathBuf,
    #[command(flatten)]
    pub oracle: OracleArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, value_enum, default_value_t = OracleKindArg::Generalized)]
    pub oracle_kind: OracleKindArg,
    /// Iterations to record; chosen from the solution counts when absent.
    #[arg(long)]
    pub tmax: Option<usize>,
    #[arg(long, value_enum, default_value_t = RuleArg::MinTotal)]
    pub rule: RuleArg,
    /// Also write the ensemble outcome (one CSV row).
    #[arg(long)]
    pub outcome: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug)]
pub struct RecursiveArgs {
    #[arg(long)]
    pub instances: PathBuf,
    /// Bits resolved per layer.
    #[arg(long)]
    pub m: u32,
    /// Cycles per layer, e.g. 2,3,2, or `default`.
    #[arg(long, default_value = "default", conflicts_with = "optimize_schedule")]
    pub schedule: String,
    /// Search the schedule on this ensemble.
    #[arg(long)]
    pub optimize_schedule: bool,
    /// Step width; defaults to 2^(-m-1).
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, value_parser = parse_rho)]
    pub rho: Option<f64>,
    #[arg(long = "r")]
    pub r: Option<f64>,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Write the query ledger (JSON) here.
    #[arg(long)]
    pub ledger: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Sweep description (JSON with a `family` tag).
    #[arg(long)]
    pub spec: PathBuf,
    /// Override the master seed of the file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the ensemble size of the file.
    #[arg(long)]
    pub count: Option<usize>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug)]
pub struct ClassicalArgs {
    /// Search-space sizes N.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["n", "instances"])]
    pub dim: Vec<u64>,
    /// Qubit counts; N = 2^n.
    #[arg(long, value_delimiter = ',', conflicts_with = "instances")]
    pub n: Vec<u32>,
    /// Solution counts N_A.
    #[arg(long, value_delimiter = ',')]
    pub solutions: Vec<u64>,
    /// Per-instance baselines from an instance file instead.
    #[arg(long)]
    pub instances: Option<PathBuf>,
    /// Success probabilities at which to report guess-count quantiles.
    #[arg(long, value_delimiter = ',')]
    pub quantile: Vec<f64>,
    #[command(flatten)]
    pub out: OutArgs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let rendered = e.render().to_string();
            eprint!("{rendered}");
            if !rendered.contains("Usage:") {
                eprintln!("\n{}", usage(std::env::args().skip(1).find(|a| !a.starts_with('-')).as_deref()));
            }
            return ExitCode::from(2);
        }
    };
    let name = cli.command.name();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            return runtime_failure(&anyhow::Error::new(e));
        }
    }
    let result = match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Run(a) => commands::run(a),
        Command::Recursive(a) => commands::recursive(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Analyze(a) => analyze::analyze(a),
        Command::Classical(a) => commands::classical(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => match e.downcast_ref::<FlagError>() {
            Some(flag) => {
                eprintln!("error: {flag}\n\n{}\n\nFor more information, try '--help'.", usage(Some(name)));
                ExitCode::from(2)
            }
            None => runtime_failure(&e),
        },
    }
}

/// Usage line of a subcommand, or of the whole program.
fn usage(subcommand: Option<&str>) -> String {
    let mut cmd = Cli::command();
    cmd.build();
    let top = cmd.render_usage().to_string();
    subcommand.and_then(|name| cmd.find_subcommand_mut(name)).map(|c| c.render_usage().to_string()).unwrap_or(top)
}

fn runtime_failure(e: &anyhow::Error) -> ExitCode {
    let kind = match e.downcast_ref::<npgrover_core::Error>() {
        Some(npgrover_core::Error::Parameter(_)) => "parameter",
        Some(npgrover_core::Error::Capability { .. }) => "capability",
        Some(npgrover_core::Error::SizeMismatch { .. }) => "size_mismatch",
        Some(npgrover_core::Error::NoSolution) => "no_solution",
        Some(npgrover_core::Error::Undefined(_)) => "undefined",
        Some(npgrover_core::Error::Io(_)) => "io",
        Some(npgrover_core::Error::Json(_)) => "json",
        None if e.downcast_ref::<std::io::Error>().is_some() => "io",
        None if e.downcast_ref::<serde_json::Error>().is_some() => "json",
        None => "runtime",
    };
    let msg = serde_json::json!({ "error": { "kind": kind, "message": format!("{e:#}") } });
    eprintln!("{msg}");
    ExitCode::from(1)
}

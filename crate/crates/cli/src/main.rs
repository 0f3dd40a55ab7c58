//! `mgplan`: microgrid investment planning from the command line.

mod artifacts;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Exit statuses.
pub mod exit {
    pub const OK: u8 = 0;
    /// `check` found a hard violation or unserved load.
    pub const VIOLATION: u8 = 1;
    pub const INPUT: u8 = 2;
    pub const NONCONVERGENCE: u8 = 3;
    pub const BACKEND: u8 = 4;
}

#[derive(Debug, Parser)]
#[command(name = "mgplan", version, about = "Deterministic and robust microgrid investment planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Least-cost plan for the deterministic loads.
    Plan {
        /// Case document (JSON).
        case: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Plan that stays feasible for every load in an uncertainty box.
    Robust {
        case: PathBuf,
        /// Lower load multiplier of the box.
        #[arg(long, requires = "load_ub", conflicts_with = "epsilon")]
        load_lb: Option<f64>,
        /// Upper load multiplier of the box.
        #[arg(long, requires = "load_lb")]
        load_ub: Option<f64>,
        /// Build the box with joint probability 1 - epsilon from the case's
        /// `uncertainty` section instead.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Main-problem solves before giving up.
        #[arg(long, default_value_t = 20)]
        max_iterations: usize,
        /// Residual above which an adversarial scenario is problematic.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Seed the scenario set from a previous `scenarios.jsonl`.
        #[arg(long)]
        restore: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Dispatch a plan against a scenario and report constraint residuals.
    Check {
        case: PathBuf,
        /// `plan.json` written by `plan` or `robust`.
        plan: PathBuf,
        /// Scenario JSON, or a `scenarios.jsonl` dump (every record is
        /// checked). Defaults to the deterministic loads.
        scenario: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Box of joint probability 1 - epsilon for the case's load model.
    ChanceBox {
        case: PathBuf,
        #[arg(long)]
        epsilon: f64,
        /// Monte Carlo draws for a coverage check (0 skips it).
        #[arg(long, default_value_t = 0)]
        samples: usize,
        /// Seed of the Monte Carlo check.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
struct CommonArgs {
    /// Relative accuracy of the polyhedral cone approximation.
    #[arg(long, default_value_t = 1e-3)]
    btn_accuracy: f64,
    /// Relative MIP gap.
    #[arg(long, default_value_t = 1e-6)]
    mip_gap: f64,
    /// Time limit per solve, seconds.
    #[arg(long, default_value_t = 600.0)]
    time_limit: f64,
    /// Optimisation backend.
    #[arg(long, default_value = "highs")]
    backend: String,
    /// Directory receiving the artifacts.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Plan { case, common } => commands::plan(&case, &common),
        Command::Robust { case, load_lb, load_ub, epsilon, max_iterations, tol, restore, common } => {
            let source = match (load_lb, load_ub, epsilon) {
                (Some(lb), Some(ub), None) => Ok(artifacts::BoxSource::Scaled { load_lb: lb, load_ub: ub }),
                (None, None, Some(e)) => Ok(artifacts::BoxSource::Chance { epsilon: e }),
                _ => Err(commands::Failure::input("give either --load-lb and --load-ub, or --epsilon")),
            };
            source.and_then(|s| commands::robust(&case, s, max_iterations, tol, restore.as_deref(), &common))
        }
        Command::Check { case, plan, scenario, tol, common } => commands::check(&case, &plan, scenario.as_deref(), tol, &common),
        Command::ChanceBox { case, epsilon, samples, seed, out_dir } => {
            commands::chance_box(&case, epsilon, samples, seed, &out_dir)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

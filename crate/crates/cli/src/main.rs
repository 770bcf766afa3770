//! `stride`: batch front end for planning, EVC evaluation, admissible-set
//! builds and governed contact simulation.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stride_core::Mode;

/// Exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const USAGE: u8 = 1;
    pub const INFEASIBLE: u8 = 2;
    pub const BUDGET: u8 = 3;
    pub const IO: u8 = 4;
    pub const VALIDATION: u8 = 5;
}

#[derive(Parser)]
#[command(name = "stride", version, about = "Multi-modal locomotion planning and governed admittance control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Common {
    /// JSON overrides with optional sections planner, energy, sweep, gains, bounds.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Recorded in the manifest; every command is deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for parallel stages.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a map and write the plan and its EVC report.
    Plan {
        #[arg(long)]
        map: PathBuf,
        /// Horizon in steps.
        #[arg(long = "T", value_parser = clap::value_parser!(u32).range(1..))]
        horizon: Option<u32>,
        /// Restrict planning to one mode.
        #[arg(long = "single-mode")]
        single_mode: Option<Mode>,
        /// Cross-check the result against exhaustive search when small enough.
        #[arg(long)]
        exact: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Check a plan file against a map.
    Validate {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        /// Horizon to check against; defaults to the plan's length.
        #[arg(long = "T", value_parser = clap::value_parser!(u32).range(1..))]
        horizon: Option<u32>,
        #[command(flatten)]
        common: Common,
    },
    /// EVC report of a plan file.
    Evc {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Single-mode EVC sweep over all modes.
    EvcSweep {
        #[arg(long)]
        map: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Build the admissible-set artifact for a scenario's gains and bounds.
    MoasBuild {
        #[arg(long)]
        scenario: PathBuf,
        /// Grid points per dimension.
        #[arg(long, default_value_t = 11, value_parser = clap::value_parser!(u64).range(1..))]
        grid: u64,
        /// Wrench model inside rollouts.
        #[arg(long, value_enum, default_value_t = commands::EnvChoice::Contact)]
        env: commands::EnvChoice,
        #[command(flatten)]
        common: Common,
    },
    /// Run a contact scenario and write its trace.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// Admissible-set artifact, required when the scenario is governed.
        #[arg(long)]
        moas: Option<PathBuf>,
        /// Run without the governor regardless of the scenario setting.
        #[arg(long)]
        no_governor: bool,
        /// Use exact rollout membership in the governor.
        #[arg(long)]
        exact: bool,
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    // clap's own usage exit code would collide with the infeasible code
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Plan { map, horizon, single_mode, exact, common } => {
            commands::plan(&map, horizon, single_mode, exact, &common)
        }
        Command::Validate { map, plan, horizon, common } => commands::validate(&map, &plan, horizon, &common),
        Command::Evc { map, plan, common } => commands::evc(&map, &plan, &common),
        Command::EvcSweep { map, common } => commands::evc_sweep(&map, &common),
        Command::MoasBuild { scenario, grid, env, common } => commands::moas_build(&scenario, grid as usize, env, &common),
        Command::Simulate { scenario, moas, no_governor, exact, common } => {
            commands::simulate(&scenario, moas.as_deref(), no_governor, exact, &common)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {:#}", failure.error);
            ExitCode::from(failure.code)
        }
    }
}

//! Command-line front end: configuration, CSV ingest and export, and the
//! `simulate`, `identify`, `compare`, `fit-fuel-curve`, and `analyze`
//! commands.

pub mod commands;
pub mod config;
pub mod csvio;
pub mod error;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use genset_core::governor::GovernorKind;

use crate::commands::Context;
use crate::config::{RunConfig, CONFIG_ENV};
pub use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "genset", version, about = "Diesel generator set dynamic model and parameter identification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// Governor model: simple, degov, ggov1, ggov1d.
    #[arg(long, global = true)]
    pub governor: Option<String>,
    /// Optimizer seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Input file, overriding the dataset or points file in the config.
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Run the configured load step.
    Simulate,
    /// Identify model parameters from a recorded load step.
    Identify,
    /// Score governor models against a recording.
    Compare,
    /// Fit engine gain and no-load fuel flow to fuel-consumption points.
    FitFuelCurve,
    /// Derive P, Q, V, f and step metrics from a recording.
    Analyze,
}

/// Loads the config and applies flag overrides.
pub fn context(common: &CommonArgs) -> CliResult<(Context, Option<GovernorKind>)> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let kind = common
        .governor
        .as_deref()
        .map(str::parse::<GovernorKind>)
        .transpose()?;
    if let Some(k) = kind {
        cfg.governor = k;
    }
    if let Some(s) = common.seed {
        cfg.identify.optimizer.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.output.dir = o.clone();
    }
    let mut ctx = Context::new(cfg);
    ctx.data = common.data.clone();
    Ok((ctx, kind))
}

fn report<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize")
}

/// Runs one command and returns its report as JSON text.
pub fn execute(command: Command, common: &CommonArgs) -> CliResult<String> {
    let (ctx, kind) = context(common)?;
    Ok(match command {
        Command::Simulate => report(&commands::cmd_simulate(&ctx)?),
        Command::Identify => report(&commands::cmd_identify(&ctx)?),
        Command::Compare => report(&commands::cmd_compare(&ctx, kind)?),
        Command::FitFuelCurve => report(&commands::cmd_fit_fuel_curve(&ctx)?),
        Command::Analyze => report(&commands::cmd_analyze(&ctx)?),
    })
}

/// Entry point shared by the binary and tests. Returns the exit code:
/// 0 on success, 1 for invalid input or configuration, 2 for numerical
/// failures.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command, &cli.common) {
        Ok(text) => {
            println!("{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

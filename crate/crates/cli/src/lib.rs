//! `fuzzydose`: command-line harness around `fuzzydose-core`.
//!
//! ```text
//! fuzzydose infer --ph 4.54 --tds 272 [--verbose]
//! fuzzydose surface <ph|ph_up|ph_down|ab_mix> [--ph-steps N] [--tds-steps N]
//! fuzzydose run <scenarios.csv> [--duration-s S]
//! fuzzydose validate <fixture.csv> [--max-ph-error-ms E] [--max-ab-error-ms E]
//! fuzzydose calibrate <observations.csv> [--fit c_ab,c_up,c_down]
//! ```
//!
//! Global options: `--config <file>`, `--rulebank <file>`, `--out <dir>`.
//! Exit status: 0 success, 1 usage, 2 failed check or fit, 3 unreadable or
//! malformed input.

pub mod commands;
pub mod config;
pub mod files;

mod error;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "fuzzydose", version, about = "Fuzzy pH and nutrient dosing: inference, simulation, calibration")]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Rulebank to use instead of the configured or built-in one.
    #[arg(long, global = true, value_name = "FILE")]
    pub rulebank: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitParam {
    #[value(name = "c_ab")]
    CAb,
    #[value(name = "c_up")]
    CUp,
    #[value(name = "c_down")]
    CDown,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pump durations for one reading.
    Infer {
        #[arg(long, allow_negative_numbers = true)]
        ph: f64,
        #[arg(long, allow_negative_numbers = true)]
        tds: f64,
        /// Also list the rules that fired.
        #[arg(short, long)]
        verbose: bool,
    },
    /// Control surface of one output as CSV (ph,tds,duration_ms).
    Surface {
        /// `ph` (pH Up and pH Down combined) or an output variable name.
        output: String,
        #[arg(long, default_value_t = 141)]
        ph_steps: usize,
        #[arg(long, default_value_t = 141)]
        tds_steps: usize,
    },
    /// Closed-loop scenarios against the simulated reservoir.
    Run {
        scenarios: PathBuf,
        /// Simulated time per scenario, for telemetry.
        #[arg(long, default_value_t = 900.0)]
        duration_s: f64,
    },
    /// Compare controller durations with reference durations.
    Validate {
        fixture: PathBuf,
        #[arg(long)]
        max_ph_error_ms: Option<f64>,
        #[arg(long)]
        max_ab_error_ms: Option<f64>,
    },
    /// Fit dosing constants and the AB-mix range bound.
    Calibrate {
        observations: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "c_ab,c_up,c_down")]
        fit: Vec<FitParam>,
        /// AB duration the fitted range bound must reproduce.
        #[arg(long, default_value_t = 4223.34)]
        ab_target_ms: f64,
        #[arg(long, default_value_t = 4.54)]
        ab_ph: f64,
        #[arg(long, default_value_t = 272.0)]
        ab_tds: f64,
        /// Leave the AB-mix range bound alone.
        #[arg(long)]
        no_ab_range: bool,
    },
}

/// Execute a parsed command line. Normal output goes to `out`, notes and
/// reports to `err`.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(p) => config::Config::load(p)?,
        None => config::Config::default(),
    };
    let ctx = commands::Context { config, rulebank: cli.rulebank.clone(), out_dir: cli.out.clone() };
    match &cli.command {
        Command::Infer { ph, tds, verbose } => commands::infer(&ctx, *ph, *tds, *verbose, out, err),
        Command::Surface { output, ph_steps, tds_steps } => commands::surface(&ctx, output, *ph_steps, *tds_steps, out, err),
        Command::Run { scenarios, duration_s } => commands::run_scenarios(&ctx, scenarios, *duration_s, out, err),
        Command::Validate { fixture, max_ph_error_ms, max_ab_error_ms } => {
            commands::validate(&ctx, fixture, *max_ph_error_ms, *max_ab_error_ms, out, err)
        }
        Command::Calibrate { observations, fit, ab_target_ms, ab_ph, ab_tds, no_ab_range } => {
            let ab = (!no_ab_range).then_some((*ab_target_ms, *ab_ph, *ab_tds));
            commands::calibrate(&ctx, observations, fit, ab, out, err)
        }
    }
}

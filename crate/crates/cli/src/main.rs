//! `lookup-lat`: generate synthetic scenarios and datasets, build lookup
//! tables or fingerprint indices, localize queries and run benchmarks.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 I/O error,
//! 3 query placed by fallback or not at all.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lookup_lateration::eval::Method;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "lookup-lat", version, about = "RSS localization by lookup-table lateration")]
struct Cli {
    /// JSON file of default flag values, keyed by long flag name.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a randomly laid out urban scenario as JSON.
    Scenario(ScenarioArgs),
    /// Simulate a located sample file from a scenario.
    Gen(GenArgs),
    /// Build lookup tables (ll) or a fingerprint index (rfp) from samples.
    Build(BuildArgs),
    /// Localize one query.
    Localize(LocalizeArgs),
    /// Run a benchmark sweep and write reports.
    Bench(BenchArgs),
}

#[derive(Debug, Default, Clone, clap::Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ScenarioArgs {
    /// Number of antennas [default: 20]
    #[arg(long)]
    pub antennas: Option<usize>,
    /// Number of rectangular obstacles [default: 50]
    #[arg(long)]
    pub obstacles: Option<usize>,
    /// Side of the square area in meters [default: 1000]
    #[arg(long)]
    pub extent: Option<f64>,
    /// Attenuation per obstacle crossed, dB [default: 20]
    #[arg(long)]
    pub penalty: Option<f64>,
    /// Receiver noise standard deviation, dB [default: 1]
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Clone, clap::Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct GenArgs {
    /// Scenario JSON; without it a default urban layout is built from the seed.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Number of uniformly placed samples.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Regular lattice of sample positions instead, e.g. `100x100`.
    #[arg(long, value_name = "NXxNY")]
    pub lattice: Option<String>,
    /// Override the scenario's noise standard deviation, dB.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Clone, clap::Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct BuildArgs {
    /// ll or rfp [default: ll]
    #[arg(long)]
    pub method: Option<Method>,
    /// Sample file.
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    /// Artifact path; omitted means count (and list) only.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Grid cell size in meters [default: 20]
    #[arg(long)]
    pub grid: Option<f64>,
    /// Grid origin `x,y` [default: 0,0]
    #[arg(long)]
    pub origin: Option<String>,
    /// RSS bin size in dB, ll only [default: 1]
    #[arg(long)]
    pub bin: Option<f64>,
    /// Store cluster centers of this diameter instead of grid ids (ll only).
    #[arg(long)]
    pub cluster: Option<f64>,
    /// Scenario JSON whose antenna positions the tables keep for fallback.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Print every table cell or grid mean.
    #[arg(long)]
    pub list: bool,
}

#[derive(Debug, Default, Clone, clap::Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct LocalizeArgs {
    /// ll, rfp or tl [default: ll]
    #[arg(long)]
    pub method: Option<Method>,
    /// Artifact written by `build` (ll, rfp).
    #[arg(long)]
    pub artifact: Option<PathBuf>,
    /// Scenario JSON giving antenna positions and path-loss model (tl).
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Readings as `antenna:rss` pairs separated by `;` or `,`.
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<String>,
    /// Continuous-mode match tolerance in meters (ll).
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Spread at which the search stops, meters (ll).
    #[arg(long)]
    pub spread: Option<f64>,
    /// euclidean or cosine (rfp) [default: euclidean]
    #[arg(long)]
    pub distance: Option<String>,
}

#[derive(Debug, Default, Clone, clap::Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct BenchArgs {
    /// Sample file; without it samples are simulated from --scenario.
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    /// Scenario JSON (antenna positions for tl and ll fallback).
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Samples to simulate when no --in is given [default: 10000]
    #[arg(long)]
    pub samples: Option<usize>,
    /// Comma-separated methods [default: ll,rfp]
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<Method>>,
    /// Comma-separated grid sizes in meters [default: 20]
    #[arg(long, value_delimiter = ',')]
    pub grids: Option<Vec<f64>>,
    /// Comma-separated RSS bin sizes for ll [default: 1]
    #[arg(long, value_delimiter = ',')]
    pub bins: Option<Vec<f64>>,
    /// Training fraction [default: 0.1]
    #[arg(long)]
    pub train_frac: Option<f64>,
    /// Repetitions [default: 10]
    #[arg(long)]
    pub reps: Option<usize>,
    /// euclidean or cosine (rfp) [default: euclidean]
    #[arg(long)]
    pub distance: Option<String>,
    /// Spread at which ll stops, meters [default: grid diagonal]
    #[arg(long)]
    pub spread: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for report.csv, report.json and timing.csv.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = cli.config.as_deref();
    let go = move || match cli.command {
        Command::Scenario(a) => commands::scenario(config::merge(a, cfg)?),
        Command::Gen(a) => commands::gen(config::merge(a, cfg)?),
        Command::Build(a) => commands::build(config::merge(a, cfg)?),
        Command::Localize(a) => commands::localize(config::merge(a, cfg)?),
        Command::Bench(a) => commands::bench(config::merge(a, cfg)?),
    };
    match cli.threads {
        None => go(),
        Some(0) => Err(CliError::usage("--threads must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::usage(e.to_string()))?
            .install(go),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lookup-lat: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

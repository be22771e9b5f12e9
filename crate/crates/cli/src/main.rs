//! `fluencelab`: synthesize, estimate, correct and validate swept-beam
//! photoacoustic fluence from the command line.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 I/O or file
//! format error, 3 numerical failure (including fits stuck at a bound).

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fluencelab::fluence::ModelKind;
use fluencelab::ErrorClass;

#[derive(Debug, Parser)]
#[command(name = "fluencelab", version, about = "Fluence estimation and correction for swept-beam photoacoustics")]
pub struct Cli {
    /// Worker threads; 0 picks one per core.
    #[arg(long, global = true, env = "FLUENCELAB_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a synthetic measurement tensor from the config's targets.
    Synth(SynthArgs),
    /// Fit optical parameters to a measurement tensor.
    Estimate(EstimateArgs),
    /// Fluence-correct the spectrum of a target and compare with a reference.
    Correct(CorrectArgs),
    /// Tabulate Monte Carlo and model profiles, model discrepancy and peak depth.
    Validate(ValidateArgs),
    /// Evaluate forward models.
    Fluence {
        #[command(subcommand)]
        command: FluenceCommand,
    },
    /// Run a single Monte Carlo simulation.
    Mc(McArgs),
    /// Reshape a wide CSV table into long format for plotting tools.
    Plotdata(PlotdataArgs),
}

#[derive(Debug, Subcommand)]
pub enum FluenceCommand {
    /// Fiber-summed fluence on the axial line and at one point, per wavelength.
    Eval(FluenceEvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Bin,
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    let n: u8 = s.parse().map_err(|_| format!("model must be 1 or 2, got {s:?}"))?;
    ModelKind::from_number(n).map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `noise.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `targets.model`.
    #[arg(long, value_parser = parse_model)]
    pub model: Option<ModelKind>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Tensor directory holding meta.json and data.f32.
    #[arg(long)]
    pub tensor: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `estimation.model`.
    #[arg(long, value_parser = parse_model)]
    pub model: Option<ModelKind>,
}

#[derive(Debug, Args)]
pub struct CorrectArgs {
    #[arg(long)]
    pub tensor: PathBuf,
    /// `result.json` written by `estimate`.
    #[arg(long)]
    pub estimates: PathBuf,
    /// Reference absorption spectrum, CSV of (wavelength_nm, alpha).
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Use the footprint of this config target instead of the support pixels.
    #[arg(long)]
    pub target: Option<usize>,
    /// Use the raw per-wavelength fits instead of the smoothed spectra.
    #[arg(long)]
    pub unsmoothed: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `mc.photons`; 0 skips Monte Carlo.
    #[arg(long)]
    pub photons: Option<u64>,
    /// Overrides `mc.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct FluenceEvalArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Model to evaluate with the config's medium.
    #[arg(long, value_parser = parse_model)]
    pub model: Option<ModelKind>,
    /// Evaluate the fitted parameters from this `result.json` instead.
    #[arg(long)]
    pub estimates: Option<PathBuf>,
    /// Lateral position of the point for the spectrum table, mm.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub x: f64,
    /// Depth of the point for the spectrum table, mm.
    #[arg(long, default_value_t = 10.0)]
    pub z: f64,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub photons: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// `bin` writes the whole voxel field, `csv` the axial line and the `y = 0` plane.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct PlotdataArgs {
    /// CSV whose first column is the abscissa and the rest are series.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Error raised for invalid command-line usage.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<fluencelab::Error>() {
            return match e.class() {
                ErrorClass::Config => 1,
                ErrorClass::Io => 2,
                ErrorClass::Numeric => 3,
            };
        }
        if cause.is::<std::io::Error>() || cause.is::<csv::Error>() || cause.is::<serde_json::Error>() {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

//! Command-line driver for the landscape pipeline.
//!
//! Every command reads and writes seed-tagged files in one output directory,
//! so pipelines compose through files only. Each run also merges an entry
//! into `provenance.json` in that directory.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use landscape_lab::{Error, Result};
use serde::Serialize;

pub mod commands;
pub mod files;

#[derive(Debug, Parser)]
#[command(name = "landscape-lab", version, about = "Localization landscape pipeline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random piecewise-constant potential.
    GenPotential(GenArgs),
    /// Solve H u = 1 and write u and W = 1/u.
    Landscape(LandscapeArgs),
    /// Wells, watershed basins and support regions of W.
    Analyze(AnalyzeArgs),
    /// Smallest eigenpairs of H.
    Eigs(EigsArgs),
    /// Eigenvalue predictions (1 + n/4) W_min and support regions.
    Predict(PredictArgs),
    /// Ratio statistics and location matching against computed eigenpairs.
    Compare(CompareArgs),
    /// Counting function N(E) with the Weyl counts for V and W.
    Weyl(WeylArgs),
    /// Eigenvalue histogram against the histogram of predictions.
    Dos(DosArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenPotential(_) => "gen-potential",
            Command::Landscape(_) => "landscape",
            Command::Analyze(_) => "analyze",
            Command::Eigs(_) => "eigs",
            Command::Predict(_) => "predict",
            Command::Compare(_) => "compare",
            Command::Weyl(_) => "weyl",
            Command::Dos(_) => "dos",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Realization seed; tags every file name.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output (and input) directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    Uniform,
    Bernoulli,
    Correlated,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenParams {
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    /// Unit cells per axis, comma separated; one value is used for every axis.
    #[arg(long, value_delimiter = ',', default_value = "256")]
    pub units: Vec<usize>,
    #[arg(long, value_enum, default_value_t = Generator::Uniform)]
    pub generator: Generator,
    /// Uniform lower bound.
    #[arg(long, default_value_t = 0.0)]
    pub lo: f64,
    /// Uniform upper bound.
    #[arg(long, default_value_t = 4.0)]
    pub hi: f64,
    /// Bernoulli value taken with probability 1 - p.
    #[arg(long, default_value_t = 0.0)]
    pub v0: f64,
    /// Bernoulli value taken with probability p.
    #[arg(long, default_value_t = 4.0)]
    pub v1: f64,
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    /// Correlated field amplitude.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Correlated field decay.
    #[arg(long, default_value_t = 1.0)]
    pub d: f64,
}

impl GenParams {
    /// Units expanded to one entry per axis.
    pub fn axis_units(&self) -> Result<Vec<usize>> {
        check_dim(self.dim)?;
        let units = match self.units.len() {
            1 => vec![self.units[0]; self.dim],
            n if n == self.dim => self.units.clone(),
            n => {
                return Err(Error::InvalidParameter(format!(
                    "--units has {n} entries for a {}D domain",
                    self.dim
                )))
            }
        };
        if let Some(u) = units.iter().find(|&&u| u < 2) {
            return Err(Error::InvalidParameter(format!("unit counts must be at least 2, got {u}")));
        }
        if self.generator == Generator::Correlated && units.iter().any(|&u| u != units[0]) {
            return Err(Error::InvalidParameter(
                "correlated fields need the same unit count on both axes".into(),
            ));
        }
        Ok(units)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub params: GenParams,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LandscapeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Grid points per unit length.
    #[arg(long, default_value_t = 10)]
    pub r: usize,
    /// Relative residual of the landscape solve.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Support level multiplier (default 1.875 in 1D, 1.56 in 2D).
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EigsArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 10)]
    pub r: usize,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Residual tolerance per eigenpair.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Also write every eigenfunction as a field file.
    #[arg(long)]
    pub save_psi: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PredictArgs {
    #[command(flatten)]
    pub common: Common,
    /// Number of wells to predict from (default: all).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: Common,
    /// Number of rank pairs in the ratio statistics; eigenpairs computed in batch mode.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Run the whole pipeline for this many seeds, starting at --seed.
    #[arg(long)]
    pub batch: Option<usize>,
    /// Worker threads for batch mode.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Grid points per unit length (batch mode).
    #[arg(long, default_value_t = 10)]
    pub r: usize,
    /// Eigenpair residual tolerance (batch mode).
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[command(flatten)]
    pub params: GenParams,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct WeylArgs {
    #[command(flatten)]
    pub common: Common,
    /// Energy window `lo:hi`.
    #[arg(long, value_parser = parse_range, default_value = "0:4")]
    pub range: (f64, f64),
    /// Number of energies in the window.
    #[arg(long, default_value_t = 101)]
    pub points: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DosArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_parser = parse_range, default_value = "0:1")]
    pub range: (f64, f64),
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
}

fn parse_range(text: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = text
        .split_once(':')
        .ok_or_else(|| format!("expected lo:hi, got {text}"))?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad lower bound {lo}"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad upper bound {hi}"))?;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(format!("empty range {lo}:{hi}"));
    }
    Ok((lo, hi))
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 1 || dim == 2 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("--dim must be 1 or 2, got {dim}")))
    }
}

pub(crate) fn check_r(r: usize) -> Result<()> {
    if r >= 2 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("--r must be at least 2, got {r}")))
    }
}

pub(crate) fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("--tol must lie in (0, 1), got {tol}")))
    }
}

pub(crate) fn check_alpha(alpha: Option<f64>) -> Result<()> {
    match alpha {
        Some(a) if !(a > 1.0) => Err(Error::InvalidParameter(format!("--alpha must exceed 1, got {a}"))),
        _ => Ok(()),
    }
}

pub(crate) fn check_positive(name: &str, value: usize) -> Result<()> {
    if value >= 1 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("--{name} must be at least 1")))
    }
}

/// Run one command to completion.
pub fn run(cli: &Cli) -> Result<()> {
    commands::dispatch(&cli.command)
}

/// The single-line JSON error report written to stderr.
pub fn error_line(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": kind, "message": message }).to_string()
}

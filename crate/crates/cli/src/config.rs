//! Command-line arguments and the optional TOML configuration file.
//!
//! Every flag can also be set in the file under the same name with `-`
//! replaced by `_`. Flags given on the command line win.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "relcal",
    version,
    about = "Flip-augmented fusion, rejection and calibration reports"
)]
pub struct Cli {
    /// TOML file with default values for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic scenario: samples, training samples and prediction runs.
    Synth(SynthArgs),
    /// Run pipelines over prediction runs and write calibration reports.
    Evaluate(EvaluateArgs),
    /// Draw reliability diagrams from one or more reports.
    Diagram(DiagramArgs),
    /// Method 1 rejection rate and accepted accuracy across β.
    BetaSweep(SweepArgs),
}

#[derive(Debug, Default, Clone, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub n_samples: Option<usize>,
    #[arg(long)]
    pub sequence_length: Option<usize>,
    #[arg(long)]
    pub variables: Option<usize>,
    /// Probability of class 1.
    #[arg(long)]
    pub balance: Option<f64>,
    #[arg(long)]
    pub separation: Option<f64>,
    /// Standard deviation of per-run probability jitter.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Sharpening exponent; above 1 makes the predictor over-confident.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub ar_coefficient: Option<f64>,
    #[arg(long)]
    pub recency_slope: Option<f64>,
    #[arg(long)]
    pub mc_runs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Clone, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub samples: Option<PathBuf>,
    #[arg(long)]
    pub runs: Option<PathBuf>,
    /// One pipeline name, or `all`.
    #[arg(long)]
    pub pipeline: Option<String>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub bin_width: Option<f64>,
    /// Class index (0 or 1) given to exact ties.
    #[arg(long)]
    pub tie_class: Option<i64>,
    /// `builtin` (trained on --train) or `external` (read from --external).
    #[arg(long)]
    pub fallback: Option<String>,
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub external: Option<PathBuf>,
    /// Expected number of runs per variant; checked against the run file.
    #[arg(long)]
    pub mc_runs: Option<usize>,
    /// Seed for the builtin fallback's initialisation.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Default, Clone, Args)]
pub struct DiagramArgs {
    /// Report files (`.json` or text).
    pub reports: Vec<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Default, Clone, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub samples: Option<PathBuf>,
    #[arg(long)]
    pub runs: Option<PathBuf>,
    /// Grid step; ignored when --betas is given.
    #[arg(long)]
    pub resolution: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub betas: Option<Vec<f64>>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Contents of the configuration file.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub out_dir: Option<PathBuf>,
    pub n_samples: Option<usize>,
    pub sequence_length: Option<usize>,
    pub variables: Option<usize>,
    pub balance: Option<f64>,
    pub separation: Option<f64>,
    pub noise: Option<f64>,
    pub gamma: Option<f64>,
    pub ar_coefficient: Option<f64>,
    pub recency_slope: Option<f64>,
    pub mc_runs: Option<usize>,
    pub seed: Option<u64>,
    pub samples: Option<PathBuf>,
    pub runs: Option<PathBuf>,
    pub pipeline: Option<String>,
    pub beta: Option<f64>,
    pub bin_width: Option<f64>,
    pub tie_class: Option<i64>,
    pub fallback: Option<String>,
    pub train: Option<PathBuf>,
    pub external: Option<PathBuf>,
    pub resolution: Option<f64>,
    pub betas: Option<Vec<f64>>,
    pub reports: Option<Vec<PathBuf>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::formats::read_text(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))
    }
}

macro_rules! fill {
    ($args:ident, $file:ident; $($f:ident),+) => {
        $( if $args.$f.is_none() { $args.$f = $file.$f.clone(); } )+
    };
}

impl SynthArgs {
    pub fn fill_from(&mut self, file: &FileConfig) {
        fill!(self, file; out_dir, n_samples, sequence_length, variables, balance, separation,
              noise, gamma, ar_coefficient, recency_slope, mc_runs, seed);
    }
}

impl EvaluateArgs {
    pub fn fill_from(&mut self, file: &FileConfig) {
        fill!(self, file; samples, runs, pipeline, beta, bin_width, tie_class, fallback, train,
              external, mc_runs, seed, out_dir);
    }
}

impl SweepArgs {
    pub fn fill_from(&mut self, file: &FileConfig) {
        fill!(self, file; samples, runs, resolution, betas, out_dir);
    }
}

impl DiagramArgs {
    pub fn fill_from(&mut self, file: &FileConfig) {
        if self.reports.is_empty() {
            self.reports = file.reports.clone().unwrap_or_default();
        }
        fill!(self, file; out_dir);
    }
}

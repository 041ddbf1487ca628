use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::PathBuf;

use twstrs_core::sampler::{DEFAULT_SHIFT_THRESHOLD, DEFAULT_SIGMA_DEG, DEFAULT_ZERO_PROB};
use twstrs_core::stats::agreement::DEFAULT_BOOTSTRAP_ITERATIONS;

#[derive(Debug, Parser)]
#[command(name = "twstrs", version, about = "Synthetic head-pose data, lateral-shift estimation and rating-study tools")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample ground-truth poses and write dataset.jsonl.
    Generate(GenerateArgs),
    /// Render a labelled mask per scene.
    Render(RenderArgs),
    /// Fit the shift calibration and decision threshold on a dataset.
    Calibrate(CalibrateArgs),
    /// Score predictions against ground truth or clinical ratings.
    Evaluate(EvaluateArgs),
    /// Inter-rater agreement with bootstrap intervals.
    Agreement(AgreementArgs),
    /// Per-task summaries of a frame-level prediction stream.
    Timeline(TimelineArgs),
    /// Run the rating-study HTTP service.
    Serve(ServeArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Render(_) => "render",
            Command::Calibrate(_) => "calibrate",
            Command::Evaluate(_) => "evaluate",
            Command::Agreement(_) => "agreement",
            Command::Timeline(_) => "timeline",
            Command::Serve(_) => "serve",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Standard deviation of each non-zero angle, degrees.
    #[arg(long, default_value_t = DEFAULT_SIGMA_DEG)]
    pub sigma: f64,
    /// Probability that an angle is exactly zero.
    #[arg(long, default_value_t = DEFAULT_ZERO_PROB)]
    pub zero_prob: f64,
    /// Shift values at or above this are labelled present.
    #[arg(long, default_value_t = DEFAULT_SHIFT_THRESHOLD)]
    pub shift_threshold: f64,
    /// Draw shifts from this list instead of U(0, 1).
    #[arg(long, value_delimiter = ',')]
    pub shift_values: Option<Vec<f64>>,
}

#[derive(Debug, Args, Serialize)]
pub struct RenderArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Base seed for per-scene appearance jitter.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Appearance seed used when masks are rendered on the fly.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory written by `render`; masks are rendered in memory otherwise.
    #[arg(long)]
    pub masks: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Avatar,
    Clinical,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth labels (avatar mode).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Ratings CSV (clinical mode).
    #[arg(long)]
    pub ratings: Option<PathBuf>,
    /// External prediction file; the internal estimator is used otherwise.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Model written by `calibrate`, required by the internal estimator.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub masks: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Decision threshold on the shift score; overrides the model's.
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct AgreementArgs {
    #[arg(long)]
    pub ratings: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BOOTSTRAP_ITERATIONS)]
    pub n_bootstrap: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct TimelineArgs {
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Keep instruction and preparation segments in the report.
    #[arg(long)]
    pub include_nonclinical: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct ServeArgs {
    /// Study manifest JSON.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Append-only rating log; replayed on startup.
    #[arg(long)]
    pub store: PathBuf,
    /// 0 picks a free port.
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Seeds rater tokens and agreement snapshots.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_BOOTSTRAP_ITERATIONS)]
    pub n_bootstrap: usize,
}

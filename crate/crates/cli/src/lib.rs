//! Command line front end: grid construction, scoring, solving, rendering,
//! evaluation and the annotation server.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod config;
pub mod serve;

pub use config::Config;

#[derive(Debug, Parser)]
#[command(name = "vcam", version, about = "Virtual camera trajectories for 360-degree video")]
pub struct Cli {
    /// JSON config file; command line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a glimpse grid manifest.
    Grid(GridArgs),
    /// Score every glimpse of a grid into a CSV file.
    Score(ScoreArgs),
    /// Search camera trajectories.
    Solve(SolveArgs),
    /// Render a trajectory into perspective frames.
    Render(RenderArgs),
    /// Compare trajectories with human tracks and with each other.
    Evaluate(EvaluateArgs),
    /// Serve frames and collect recorded tracks for the annotation editor.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridKind {
    Full,
    NoZoom,
    Coarse,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Video length in seconds.
    #[arg(long)]
    pub length: Option<f64>,
    #[arg(long, value_enum, default_value = "full")]
    pub kind: GridKind,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScorerArgs {
    /// Scorer kind: random, center-prior, motion-proxy, saliency-proxy or external-file.
    #[arg(long)]
    pub scorer: Option<String>,
    /// Scorer parameter as key=value; repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    /// Equirectangular frame directory for frame-based scorers.
    #[arg(long)]
    pub frames: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub grid: PathBuf,
    #[command(flatten)]
    pub scorer: ScorerArgs,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolveMode {
    Autocam,
    Zoom,
    Fast,
    Diverse,
    FastDiverse,
    #[value(name = "baseline:center")]
    BaselineCenter,
    #[value(name = "baseline:eyelevel")]
    BaselineEyelevel,
    #[value(name = "baseline:saliency")]
    BaselineSaliency,
}

impl SolveMode {
    pub fn name(&self) -> &'static str {
        match self {
            SolveMode::Autocam => "autocam",
            SolveMode::Zoom => "zoom",
            SolveMode::Fast => "fast",
            SolveMode::Diverse => "diverse",
            SolveMode::FastDiverse => "fast-diverse",
            SolveMode::BaselineCenter => "baseline:center",
            SolveMode::BaselineEyelevel => "baseline:eyelevel",
            SolveMode::BaselineSaliency => "baseline:saliency",
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long, value_enum)]
    pub mode: SolveMode,
    /// Score CSV written by `score` (its grid manifest sits next to it).
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Grid manifest, for modes that need no scores.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Video length in seconds when neither scores nor a grid are given.
    #[arg(long)]
    pub length: Option<f64>,
    #[command(flatten)]
    pub scorer: ScorerArgs,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub video_id: Option<String>,
    /// Record wall-clock time in the cost report.
    #[arg(long)]
    pub timing: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScheduleArg {
    Hold,
    Smooth,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub frames: PathBuf,
    #[arg(long)]
    pub trajectory: PathBuf,
    #[arg(long)]
    pub width: Option<u32>,
    #[arg(long)]
    pub height: Option<u32>,
    #[arg(long, value_enum)]
    pub schedule: Option<ScheduleArg>,
    /// Transition length in seconds for the smooth schedule.
    #[arg(long)]
    pub transition: Option<f64>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Algorithm trajectory files.
    #[arg(long, num_args = 1.., required = true)]
    pub algo: Vec<PathBuf>,
    /// Human trajectory files (recorded tracks or keyframes).
    #[arg(long, num_args = 1..)]
    pub human: Vec<PathBuf>,
    /// Frame rate for per-frame comparison.
    #[arg(long)]
    pub fps: Option<f64>,
    /// Cost report to embed.
    #[arg(long)]
    pub cost: Option<PathBuf>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub frames: PathBuf,
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Directory receiving uploaded trajectories.
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long)]
    pub bind: Option<String>,
}

pub fn run(cli: Cli) -> vcam_core::Result<()> {
    let cfg = match &cli.config {
        Some(path) => Config::read(path)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Grid(a) => commands::grid(&a, &cfg),
        Command::Score(a) => commands::score(&a, &cfg),
        Command::Solve(a) => commands::solve(&a, &cfg).map(|_| ()),
        Command::Render(a) => commands::render(&a, &cfg).map(|_| ()),
        Command::Evaluate(a) => commands::evaluate(&a, &cfg).map(|_| ()),
        Command::Serve(a) => serve::serve(&a, &cfg),
    }
}

//! `vidcut`: mask discovery, copy-paste video synthesis and evaluation.
//!
//! Exit status: 0 success, 2 I/O, 3 configuration, 4 data mismatch.

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use error::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "vidcut", version, about = "Unsupervised video instance segmentation toolkit")]
struct Cli {
    /// Worker threads; the VIDCUT_JOBS environment variable takes precedence.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Discover object masks from patch features.
    Maskcut(MaskcutArgs),
    /// Turn images with masks into synthetic videos with trajectories.
    Synth(SynthArgs),
    /// Score predicted trajectories against ground truth.
    Eval(EvalArgs),
    /// Planted-object demo: features, discovery, synthesis and scoring.
    Demo(DemoArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CrfArgs {
    /// Skip CRF refinement of the upsampled masks.
    #[arg(long)]
    pub no_crf: bool,
    #[arg(long, default_value_t = 10)]
    pub crf_iterations: usize,
    #[arg(long, default_value_t = 0.9)]
    pub crf_unary_prob: f64,
    #[arg(long, default_value_t = 3.0)]
    pub crf_gauss_sigma: f64,
    #[arg(long, default_value_t = 3.0)]
    pub crf_gauss_weight: f64,
    #[arg(long, default_value_t = 60.0)]
    pub crf_bilateral_sigma_xy: f64,
    #[arg(long, default_value_t = 10.0)]
    pub crf_bilateral_sigma_rgb: f64,
    #[arg(long, default_value_t = 5.0)]
    pub crf_bilateral_weight: f64,
    #[arg(long, default_value_t = 11)]
    pub crf_radius: usize,
}

#[derive(Args, Debug)]
pub struct MaskcutArgs {
    /// Directory of `<stem>.npy` feature tensors with `<stem>.json` sidecars.
    #[arg(long)]
    pub features: PathBuf,
    /// Directory of `<stem>.png` images matching the feature files.
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Maximum masks per image.
    #[arg(long, default_value_t = 3)]
    pub t: usize,
    /// Affinity threshold; 0 keeps raw cosine similarities.
    #[arg(long, default_value_t = 0.15)]
    pub tau: f64,
    /// Keep each whole foreground side instead of the seed's connected component.
    #[arg(long)]
    pub no_seed_component: bool,
    #[command(flatten)]
    pub crf: CrfArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Motion {
    Interpolate,
    Independent,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Directory of `<stem>.png` images.
    #[arg(long)]
    pub images: PathBuf,
    /// Mask manifest as written by `maskcut`; video ids are image stems.
    #[arg(long)]
    pub masks: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub frames: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.2)]
    pub min_visible: f64,
    #[arg(long, value_enum, default_value_t = Motion::Interpolate)]
    pub motion: Motion,
    #[arg(long, default_value_t = 0.8)]
    pub scale_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub scale_max: f64,
    #[arg(long, default_value_t = 30.0)]
    pub rotation_max: f64,
    /// Largest shift as a fraction of the frame size.
    #[arg(long, default_value_t = 0.25)]
    pub max_shift: f64,
    #[arg(long, default_value_t = 0.8)]
    pub brightness_min: f64,
    #[arg(long, default_value_t = 1.2)]
    pub brightness_max: f64,
    #[arg(long, default_value_t = 0.8)]
    pub contrast_min: f64,
    #[arg(long, default_value_t = 1.2)]
    pub contrast_max: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    Ytvis,
    Davis,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long, value_enum, default_value_t = Protocol::Ytvis)]
    pub protocol: Protocol,
    /// Report JSON destination.
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated IoU thresholds (default 0.50:0.05:0.95).
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
pub struct DemoArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of planted images.
    #[arg(long, default_value_t = 4)]
    pub images: usize,
    /// Patch grid side.
    #[arg(long, default_value_t = 16)]
    pub grid: usize,
    #[arg(long, default_value_t = 8)]
    pub patch: usize,
    #[arg(long, default_value_t = 2)]
    pub frames: usize,
}

fn jobs(flag: usize) -> CliResult<usize> {
    let n = match std::env::var("VIDCUT_JOBS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Config(format!("VIDCUT_JOBS={v:?} is not a thread count")))?,
        Err(_) => flag,
    };
    if n == 0 {
        return Err(CliError::Config("jobs must be >= 1".into()));
    }
    Ok(n)
}

fn run(cli: Cli) -> CliResult<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs(cli.jobs)?)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Maskcut(a) => commands::maskcut::run(&a),
        Command::Synth(a) => commands::synth::run(&a),
        Command::Eval(a) => commands::eval::run(&a),
        Command::Demo(a) => commands::demo::run(&a),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

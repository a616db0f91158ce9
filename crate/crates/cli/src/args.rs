use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "segfix",
    version,
    about = "Boundary refinement toolkit for segmentation label maps"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Generate boundary masks, direction maps, and offset fields from
    /// ground-truth labels or instance masks
    GenGt(GenGtArgs),
    /// Refine coarse label maps with precomputed offset fields
    Refine(RefineArgs),
    /// Evaluate predictions against ground truth (mIoU, boundary F-score)
    Eval(EvalArgs),
    /// Aggregate the error-distance histogram over a dataset
    Histogram(HistogramArgs),
    /// Generate a synthetic dataset (ground truth and optional corrupted
    /// coarse maps) plus its manifest
    Synth(SynthArgs),
    /// Run the ground-truth-offset refinement experiment end to end on
    /// synthetic data
    OracleExp(OracleArgs),
    /// Boundary-pixel proportion statistics over a dataset
    Stats(StatsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Semantic,
    Instance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Rescale,
    Iterative,
}

impl SchemeArg {
    pub fn to_scheme(self) -> segfix_core::Scheme {
        match self {
            SchemeArg::Rescale => segfix_core::Scheme::Rescale,
            SchemeArg::Iterative => segfix_core::Scheme::Iterative,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SchemeArg::Rescale => "rescale",
            SchemeArg::Iterative => "iterative",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricKind {
    Miou,
    Bf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BfAverage {
    /// Mean of per-image class means
    Macro,
    /// Pool contour match counts dataset-wide, then score
    Pooled,
}

#[derive(Parser, Debug)]
pub struct GenGtArgs {
    /// Dataset manifest (JSON)
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory for {id}_boundary.npy, {id}_dir.npy, {id}_offset.npy
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Boundary-band threshold in pixels (strict: distance < gamma)
    #[arg(long, default_value_t = 5.0)]
    pub gamma: f32,
    /// Direction categories (4, 8, or 16)
    #[arg(long, default_value_t = 8)]
    pub num_dirs: u8,
    /// Ground-truth source: semantic labels or instance masks
    #[arg(long, value_enum, default_value_t = Mode::Semantic)]
    pub mode: Mode,
    /// Worker threads for image-level parallelism
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Write a JSON run report here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Parser, Debug)]
pub struct RefineArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory holding {id}_offset.npy (and optionally {id}_boundary.npy)
    #[arg(long)]
    pub offsets_dir: PathBuf,
    /// Output directory for {id}_refined.png
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Thick-boundary handling: one rescaled hop or iterative unit hops
    #[arg(long, value_enum, default_value_t = SchemeArg::Rescale)]
    pub scheme: SchemeArg,
    /// Offset rescale factor for the rescale scheme
    #[arg(long, default_value_t = 2)]
    pub scale: u32,
    /// Walk cap for the iterative scheme
    #[arg(long, default_value_t = 10)]
    pub max_iterations: u32,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Parser, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory holding predictions ({id}_refined.png or {id}.png)
    #[arg(long)]
    pub pred_dir: PathBuf,
    /// Metrics to compute
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [MetricKind::Miou, MetricKind::Bf])]
    pub metrics: Vec<MetricKind>,
    /// Relative boundary F-score thresholds (fraction of image diagonal)
    #[arg(long, value_delimiter = ',', default_values_t = [0.0003, 0.0006, 0.0009])]
    pub bf_thresholds: Vec<f64>,
    /// How the dataset-level boundary F-score is aggregated
    #[arg(long, value_enum, default_value_t = BfAverage::Macro)]
    pub bf_average: BfAverage,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Parser, Debug)]
pub struct HistogramArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub pred_dir: PathBuf,
    /// Histogram bin edges in pixels (strictly increasing)
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 3.0, 4.0, 5.0, 10.0, 20.0])]
    pub bins: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Parser, Debug)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Image size as WIDTHxHEIGHT (e.g. 128x128) or a single side length
    #[arg(long, default_value = "128x128")]
    pub size: String,
    /// Number of classes including the background class 0
    #[arg(long, default_value_t = 5)]
    pub classes: u16,
    /// Shapes painted per image
    #[arg(long, default_value_t = 7)]
    pub shapes: usize,
    /// Minimum shape extent in pixels
    #[arg(long, default_value_t = 8)]
    pub min_extent: u32,
    /// Number of images to generate
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Corruption band width in pixels (used when --flip-prob > 0)
    #[arg(long, default_value_t = 2.0)]
    pub band_width: f32,
    /// Probability of flipping each band pixel; 0 disables the corrupted
    /// coarse maps
    #[arg(long, default_value_t = 0.0)]
    pub flip_prob: f64,
    /// Seed for the corruption stream (defaults to a scramble of --seed)
    #[arg(long)]
    pub corrupt_seed: Option<u64>,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Parser, Debug)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "128x128")]
    pub size: String,
    #[arg(long, default_value_t = 5)]
    pub classes: u16,
    #[arg(long, default_value_t = 7)]
    pub shapes: usize,
    #[arg(long, default_value_t = 8)]
    pub min_extent: u32,
    /// Number of experiment images
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    #[arg(long, default_value_t = 2.0)]
    pub band_width: f32,
    #[arg(long, default_value_t = 0.5)]
    pub flip_prob: f64,
    #[arg(long)]
    pub corrupt_seed: Option<u64>,
    #[arg(long, default_value_t = 5.0)]
    pub gamma: f32,
    #[arg(long, default_value_t = 8)]
    pub num_dirs: u8,
    #[arg(long, value_enum, default_value_t = SchemeArg::Rescale)]
    pub scheme: SchemeArg,
    #[arg(long, default_value_t = 2)]
    pub scale: u32,
    #[arg(long, default_value_t = 10)]
    pub max_iterations: u32,
    /// Boundary F-score threshold for the report
    #[arg(long, default_value_t = 0.0003)]
    pub theta: f64,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Parser, Debug)]
pub struct StatsArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Boundary widths in pixels
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 3.0, 4.0, 5.0])]
    pub widths: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `WIDTHxHEIGHT` or a single square side length.
pub fn parse_size(size: &str) -> Result<(usize, usize), String> {
    let parse_dim = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| format!("bad size component {s:?}"))
            .and_then(|v| {
                if v == 0 {
                    Err("size components must be positive".to_string())
                } else {
                    Ok(v)
                }
            })
    };
    match size.split_once(['x', 'X']) {
        Some((w, h)) => Ok((parse_dim(h)?, parse_dim(w)?)),
        None => {
            let side = parse_dim(size)?;
            Ok((side, side))
        }
    }
}

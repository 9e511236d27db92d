//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "gbpc",
    version,
    about = "Granular-ball pixel computing: incomplete priors for image fusion"
)]
pub struct Cli {
    /// Worker threads for patch and sweep fan-out [default: available parallelism]
    #[arg(long, global = true, env = "GBPC_JOBS")]
    pub jobs: Option<usize>,

    /// Emit machine-readable JSON on stdout
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the prior of one image pair
    Prior(PriorArgs),
    /// Build a patch dataset with per-patch priors and a JSONL manifest
    Dataset(DatasetArgs),
    /// Evaluate fusion quality metrics of a fused image
    Metrics(MetricsArgs),
    /// Sweep k and delta-d and aggregate prior quality
    Sweep(SweepArgs),
    /// Dump Sobel/Laplacian maps and the loss breakdown for a fixture
    Kernels(KernelsArgs),
}

#[derive(Debug, Clone, Args)]
pub struct EngineArgs {
    /// Split multiple: the ball splits once its radius reaches k * delta-d
    #[arg(long, default_value_t = 6)]
    pub k: u32,

    /// Expansion step on the luminance axis
    #[arg(long = "delta-d", default_value_t = 10.0)]
    pub delta_d: f64,

    /// Modality gate threshold on the POS ratio
    #[arg(long, default_value_t = 0.95)]
    pub m: f64,
}

#[derive(Debug, Args)]
pub struct PriorArgs {
    /// First source image
    #[arg(long)]
    pub a: PathBuf,

    /// Second source image
    #[arg(long)]
    pub b: PathBuf,

    /// Output PNG; the confidence sidecar is written next to it as .json
    #[arg(long)]
    pub out: PathBuf,

    /// Also write the evolution trace as JSON
    #[arg(long)]
    pub trace: Option<PathBuf>,

    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PairInputs {
    /// Source pair as A,B (repeatable)
    #[arg(long = "pair", value_name = "A,B", conflicts_with_all = ["a_dir", "b_dir"])]
    pub pairs: Vec<String>,

    /// Directory of first sources, matched by file name with --b-dir
    #[arg(long, requires = "b_dir")]
    pub a_dir: Option<PathBuf>,

    /// Directory of second sources
    #[arg(long, requires = "a_dir")]
    pub b_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    #[command(flatten)]
    pub inputs: PairInputs,

    /// Output directory
    #[arg(long)]
    pub out: PathBuf,

    /// Patch side length
    #[arg(long, default_value_t = 128)]
    pub patch_size: usize,

    /// Patch stride
    #[arg(long, default_value_t = 64)]
    pub stride: usize,

    /// Resize cap width
    #[arg(long, default_value_t = 640)]
    pub cap_w: usize,

    /// Resize cap height
    #[arg(long, default_value_t = 480)]
    pub cap_h: usize,

    /// Seed of the flip RNG
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Number of trailing pairs (by id) marked as holdout
    #[arg(long, default_value_t = 0)]
    pub holdout: usize,

    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Fused image
    #[arg(long)]
    pub fused: PathBuf,

    /// First source image
    #[arg(long)]
    pub a: PathBuf,

    /// Second source image
    #[arg(long)]
    pub b: PathBuf,

    /// Method label in the report
    #[arg(long, default_value = "fused")]
    pub method: String,

    /// Report format (--json implies json)
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Write the report to a file instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub inputs: PairInputs,

    /// k values: comma list of values or lo..hi ranges
    #[arg(long, default_value = "2,4,6,8,10")]
    pub k: String,

    /// delta-d values: comma list of values or lo..hi ranges
    #[arg(long = "delta-d", default_value = "5,10,15,20")]
    pub delta_d: String,

    /// Step for lo..hi ranges
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,

    /// Modality gate threshold on the POS ratio
    #[arg(long, default_value_t = 0.95)]
    pub m: f64,

    /// Write the grid to a file instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KernelsArgs {
    /// First source image
    #[arg(long)]
    pub a: PathBuf,

    /// Second source image
    #[arg(long)]
    pub b: PathBuf,

    /// Prior PNG with its .json sidecar [default: computed from A and B]
    #[arg(long)]
    pub prior: Option<PathBuf>,

    /// Network output image [default: the prior]
    #[arg(long)]
    pub output: Option<PathBuf>,

    /// Override r_pos (requires --r-bnd)
    #[arg(long, requires = "r_bnd")]
    pub r_pos: Option<f64>,

    /// Override r_bnd (requires --r-pos)
    #[arg(long, requires = "r_pos")]
    pub r_bnd: Option<f64>,

    /// Write the dump to a file instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[command(flatten)]
    pub engine: EngineArgs,
}

/// Parses `"2,4,6"`, `"2..10"` or mixtures; ranges are inclusive and use
/// `step`. Returns the values in the given order with duplicates removed.
pub fn parse_grid(spec: &str, step: f64) -> Result<Vec<f64>, String> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(format!("step must be positive, got {step}"));
    }
    let mut out: Vec<f64> = Vec::new();
    for item in spec.split(',').map(str::trim) {
        if item.is_empty() {
            return Err(format!("empty item in {spec:?}"));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("not a number: {s:?}"))
        };
        if let Some((lo, hi)) = item.split_once("..") {
            let (lo, hi) = (parse(lo)?, parse(hi)?);
            if hi < lo {
                return Err(format!("empty range {item:?}"));
            }
            let n = ((hi - lo) / step + 1e-9).floor() as usize;
            out.extend((0..=n).map(|i| lo + i as f64 * step));
        } else {
            out.push(parse(item)?);
        }
    }
    let mut seen = Vec::with_capacity(out.len());
    for v in out {
        if !seen.contains(&v) {
            seen.push(v);
        }
    }
    Ok(seen)
}

/// [`parse_grid`] restricted to positive integers.
pub fn parse_int_grid(spec: &str, step: f64) -> Result<Vec<u32>, String> {
    parse_grid(spec, step)?
        .into_iter()
        .map(|v| {
            if v >= 1.0 && v.fract() == 0.0 && v <= f64::from(u32::MAX) {
                Ok(v as u32)
            } else {
                Err(format!("expected a positive integer, got {v}"))
            }
        })
        .collect()
}

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "isophote", version, about = "Structure-tensor directed image inpainting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Restore the masked region of an image.
    Inpaint(InpaintArgs),
    /// Coherence-enhancing diffusion over the whole image.
    Denoise(DenoiseArgs),
    /// MSE, PSNR and MSSIM of an image against a reference.
    Metrics(MetricsArgs),
    /// Run every inpainting method on one image and tabulate the scores.
    Bench(BenchArgs),
    /// Write a synthetic ground truth, mask and damaged image.
    Synth(SynthArgs),
}

/// Solver parameters. Unset flags fall back to the config file, then to the
/// built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct ParamArgs {
    /// Flat key=value file supplying parameters not given as flags.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Time step.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Gain of the diffusion weight.
    #[arg(long)]
    pub c: Option<f64>,
    /// Contrast threshold, in intensity units (0..255).
    #[arg(long)]
    pub k: Option<f64>,
    /// Pre-smoothing scale of the structure tensor.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Integration scale of the structure tensor.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Number of iterations.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Degeneracy threshold of the eigen solver.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Hole initialization: onion-peel, mean-fill or keep-damaged.
    #[arg(long)]
    pub init: Option<String>,
    /// Clamp every iterate to [0, 255].
    #[arg(long, value_name = "BOOL")]
    pub clamp: Option<bool>,
    /// Stop early once the largest per-step change falls below this value.
    #[arg(long = "stop-tol")]
    pub stop_tol: Option<f64>,
    /// Use the unit-range threshold k = 0.05 as the default instead of 0.05 * 255.
    #[arg(long = "k-paper-scale")]
    pub k_unit_range: bool,
    /// Regularization of the total-variation diffusivity.
    #[arg(long = "tv-eps")]
    pub tv_eps: Option<f64>,
    /// Corner weight of the fast-convolution kernel.
    #[arg(long = "fast-corner")]
    pub fast_corner: Option<f64>,
    /// Cross-structure eigenvalue of coherence-enhancing diffusion.
    #[arg(long)]
    pub c1: Option<f64>,
    /// Coherence scale of coherence-enhancing diffusion.
    #[arg(long)]
    pub c2: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct MaskArgs {
    /// Mask image; any nonzero sample marks a pixel to restore.
    #[arg(long, value_name = "FILE", conflicts_with = "mask_color")]
    pub mask: Option<PathBuf>,
    /// Mark pixels of this color (r,g,b) in the input as damaged.
    #[arg(long = "mask-color", value_name = "R,G,B", value_delimiter = ',')]
    pub mask_color: Option<Vec<f64>>,
    /// Per-channel tolerance of the color key.
    #[arg(long = "mask-tol", default_value_t = 0.0)]
    pub mask_tol: f64,
}

#[derive(Debug, Args)]
pub struct InpaintArgs {
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    #[command(flatten)]
    pub mask: MaskArgs,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// tensor, harmonic, tv or fast.
    #[arg(long, default_value = "tensor")]
    pub method: String,
    /// Save the iterate every N steps next to the output.
    #[arg(long = "snapshot-every", value_name = "N")]
    pub snapshot_every: Option<usize>,
    /// Ground truth to score the result against.
    #[arg(long, value_name = "FILE")]
    pub reference: Option<PathBuf>,
    /// Write lambda+, lambda- and theta- of the result as PFM float images into DIR.
    #[arg(long = "dump-eigen", value_name = "DIR")]
    pub dump_eigen: Option<PathBuf>,
    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    #[arg(long = "snapshot-every", value_name = "N")]
    pub snapshot_every: Option<usize>,
    #[arg(long, value_name = "FILE")]
    pub reference: Option<PathBuf>,
    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Original (ground-truth) image.
    #[arg(long, value_name = "FILE")]
    pub reference: PathBuf,
    /// Image to score.
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    /// Compute MSE and PSNR on luminance instead of all samples.
    #[arg(long)]
    pub luminance: bool,
    /// PSNR as 10 log10(peak / MSE).
    #[arg(long = "unsquared-peak")]
    pub unsquared_peak: bool,
    /// Also write the report as JSON.
    #[arg(long, value_name = "FILE")]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Undamaged original; required unless --synth is given.
    #[arg(long = "in", value_name = "FILE", required_unless_present = "synth")]
    pub input: Option<PathBuf>,
    #[arg(
        long,
        value_name = "FILE",
        required_unless_present = "synth",
        conflicts_with = "synth"
    )]
    pub mask: Option<PathBuf>,
    /// Benchmark a generated image instead: edge, ramp, stripes or disk.
    #[arg(long, conflicts_with = "input")]
    pub synth: Option<String>,
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    /// Image label in the table; defaults to the file stem or synthetic kind.
    #[arg(long)]
    pub name: Option<String>,
    /// CSV table destination; standard output if neither --csv nor --json is given.
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub json: Option<PathBuf>,
    /// Write 0 in the seconds column so repeated runs are byte-identical.
    #[arg(long = "no-timing")]
    pub no_timing: bool,
    /// Save each method's restored image into DIR.
    #[arg(long = "out-dir", value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// edge, ramp, stripes or disk.
    #[arg(long)]
    pub kind: String,
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    #[arg(long, default_value_t = 3)]
    pub channels: usize,
    #[arg(long = "tone-a", default_value_t = 64.0)]
    pub tone_a: f64,
    #[arg(long = "tone-b", default_value_t = 192.0)]
    pub tone_b: f64,
    /// Side of the square hole.
    #[arg(long, default_value_t = 16)]
    pub hole: usize,
    #[arg(long, default_value_t = 8)]
    pub period: usize,
    /// Ramp slope.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Directory receiving truth, damaged and mask images.
    #[arg(long = "out-dir", value_name = "DIR")]
    pub out_dir: PathBuf,
    /// png or pnm.
    #[arg(long, default_value = "png")]
    pub format: String,
}

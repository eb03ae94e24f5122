//! Side-by-side comparison of the inpainting methods on one damaged image.

use crate::error::Result;
use crate::image::{ImageBuffer, Mask};
use crate::inpaint::{run_method, Method, SolverConfig};
use crate::quality::{report, BenchRow};
use crate::synth::damage_fill;

/// Output of one method in a comparison run.
#[derive(Debug, Clone)]
pub struct BenchResult {
    pub row: BenchRow,
    pub restored: ImageBuffer,
}

/// Damages `truth` inside `mask`, restores it with every inpainting method
/// and scores each result against `truth`.
///
/// With `timing` off the `seconds` column is written as 0 so that repeated
/// runs produce identical tables.
pub fn run_bench(
    truth: &ImageBuffer,
    mask: &Mask,
    cfg: &SolverConfig,
    image_name: &str,
    timing: bool,
) -> Result<Vec<BenchResult>> {
    let damaged = mask.damage(truth, &damage_fill(truth.channels()))?;
    Method::INPAINTING
        .iter()
        .map(|&method| {
            let (restored, stats) = run_method(method, &damaged, mask, cfg, None)?;
            let q = report(truth, &restored)?;
            let seconds = if timing { stats.seconds } else { 0.0 };
            Ok(BenchResult {
                row: BenchRow::new(method.name(), image_name, &q, stats.iterations, seconds),
                restored,
            })
        })
        .collect()
}

/// First column in `x_range` whose luminance reaches the midpoint of the two
/// tones on row `y`; `None` if the row never crosses.
pub fn edge_column(img: &ImageBuffer, y: usize, x_range: std::ops::Range<usize>, lo: f64, hi: f64) -> Option<usize> {
    let mid = 0.5 * (lo + hi);
    let lum = img.luminance();
    x_range.into_iter().find(|&x| lum.get(x, y) >= mid)
}

/// Number of pixels on row `y` whose luminance lies strictly between the two tones.
pub fn transition_width(img: &ImageBuffer, y: usize, x_range: std::ops::Range<usize>, lo: f64, hi: f64) -> usize {
    let lum = img.luminance();
    x_range
        .into_iter()
        .filter(|&x| {
            let v = lum.get(x, y);
            v > lo && v < hi
        })
        .count()
}

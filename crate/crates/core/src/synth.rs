//! Deterministic synthetic test cases: ground truth, mask, damaged image.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::image::{ImageBuffer, Mask};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    /// Two tones split by a vertical edge at the center column.
    Edge,
    /// Horizontal ramp `u = alpha * x`.
    Ramp,
    /// Horizontal bands alternating every half period.
    Stripes,
    /// Filled disk on a flat background.
    Disk,
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edge" => Ok(Self::Edge),
            "ramp" => Ok(Self::Ramp),
            "stripes" => Ok(Self::Stripes),
            "disk" => Ok(Self::Disk),
            other => Err(Error::InvalidParameter(format!(
                "unknown synthetic kind {other:?} (expected edge, ramp, stripes or disk)"
            ))),
        }
    }
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Edge => "edge",
            Self::Ramp => "ramp",
            Self::Stripes => "stripes",
            Self::Disk => "disk",
        })
    }
}

pub const MIN_SIZE: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub kind: SynthKind,
    /// Image side in pixels (square images).
    pub size: usize,
    pub channels: usize,
    /// Background / first tone.
    pub tone_a: f64,
    /// Foreground / second tone.
    pub tone_b: f64,
    /// Side of the square hole.
    pub hole: usize,
    /// Stripe period in pixels.
    pub period: usize,
    /// Ramp slope; `None` picks the largest integer slope that stays within 255.
    pub alpha: Option<f64>,
}

impl SynthSpec {
    pub fn new(kind: SynthKind, size: usize) -> Self {
        Self {
            kind,
            size,
            channels: 3,
            tone_a: 64.0,
            tone_b: 192.0,
            hole: 16,
            period: 8,
            alpha: None,
        }
    }

    pub fn ramp_slope(&self) -> f64 {
        self.alpha.unwrap_or_else(|| ((255 / (self.size - 1)) as f64).max(1.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCase {
    pub truth: ImageBuffer,
    pub mask: Mask,
    pub damaged: ImageBuffer,
}

/// Color written into hole pixels of damaged images: pure red for RGB, black for gray.
pub fn damage_fill(channels: usize) -> Vec<f64> {
    if channels == 3 {
        vec![255.0, 0.0, 0.0]
    } else {
        vec![0.0; channels]
    }
}

pub fn generate(spec: &SynthSpec) -> Result<SynthCase> {
    let n = spec.size;
    if n < MIN_SIZE {
        return Err(Error::InvalidParameter(format!(
            "synthetic size must be >= {MIN_SIZE}, got {n}"
        )));
    }
    if spec.hole == 0 || spec.hole >= n {
        return Err(Error::InvalidParameter(format!(
            "hole side must lie in 1..{n}, got {}",
            spec.hole
        )));
    }
    if spec.kind == SynthKind::Stripes && spec.period < 2 {
        return Err(Error::InvalidParameter(format!(
            "stripe period must be >= 2, got {}",
            spec.period
        )));
    }
    let (a, b) = (spec.tone_a, spec.tone_b);
    let center = n as f64 / 2.0;
    let radius = n as f64 / 4.0;
    let alpha = spec.ramp_slope();
    let value = |x: usize, y: usize| -> f64 {
        match spec.kind {
            SynthKind::Edge => {
                if x < n / 2 {
                    a
                } else {
                    b
                }
            }
            SynthKind::Ramp => alpha * x as f64,
            SynthKind::Stripes => {
                if y % spec.period < spec.period / 2 {
                    a
                } else {
                    b
                }
            }
            SynthKind::Disk => {
                let (dx, dy) = (x as f64 + 0.5 - center, y as f64 + 0.5 - center);
                if dx * dx + dy * dy <= radius * radius {
                    b
                } else {
                    a
                }
            }
        }
    };
    let truth = ImageBuffer::from_fn(n, n, spec.channels, |x, y, _| value(x, y))?;

    // Centered hole, except for the disk where it straddles the right rim.
    let x0 = match spec.kind {
        SynthKind::Disk => ((center + radius) as usize)
            .saturating_sub(spec.hole / 2)
            .min(n - spec.hole),
        _ => n / 2 - spec.hole / 2,
    };
    let y0 = n / 2 - spec.hole / 2;
    let mask = Mask::rect(n, n, x0, y0, spec.hole, spec.hole);
    let damaged = mask.damage(&truth, &damage_fill(spec.channels))?;
    Ok(SynthCase { truth, mask, damaged })
}

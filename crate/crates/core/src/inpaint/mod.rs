//! Iterative inpainting solvers.
//!
//! Every solver advances Jacobi-style: each iteration maps the previous image
//! to a fresh one, and pixels outside the mask are copied through untouched.

mod ced;
mod diffusion;
mod fast;
mod init;
mod tensor;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

pub use ced::{ced_denoise, ced_denoise_step, ced_denoise_with};
pub use diffusion::{harmonic_inpaint, nonlinear_diffusion_step, tv_diffusivity, tv_inpaint, DEFAULT_TV_EPS};
pub use fast::{fast_convolution_inpaint, FastKernel};
pub use init::initialize_hole;
pub use tensor::{tensor_inpaint, tensor_inpaint_step, tensor_inpaint_with};

use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::tensor::DEFAULT_EPS;

/// Largest `dt * c` for which the explicit scheme is considered safe.
pub const STABILITY_LIMIT: f64 = 0.25;

/// How hole pixels are seeded before iterating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitMode {
    /// Fill layer by layer from the boundary inward with 4-neighbor means.
    #[default]
    OnionPeel,
    /// Fill with the per-channel mean of all known pixels.
    MeanFill,
    /// Leave the damaged values in place.
    KeepDamaged,
}

impl FromStr for InitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "onion-peel" | "onion" => Ok(Self::OnionPeel),
            "mean-fill" | "mean" => Ok(Self::MeanFill),
            "keep-damaged" | "keep" => Ok(Self::KeepDamaged),
            other => Err(Error::InvalidParameter(format!(
                "unknown init mode {other:?} (expected onion-peel, mean-fill or keep-damaged)"
            ))),
        }
    }
}

impl fmt::Display for InitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::OnionPeel => "onion-peel",
            Self::MeanFill => "mean-fill",
            Self::KeepDamaged => "keep-damaged",
        })
    }
}

/// Time step, weight function and smoothing scales of the tensor-directed
/// solver, plus the solver policy knobs.
///
/// `k` is expressed in the same units as image intensities (`[0, 255]`). A
/// threshold tuned for unit-range intensities corresponds to `k * 255`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionParams {
    pub dt: f64,
    pub c: f64,
    pub k: f64,
    pub sigma: f64,
    pub rho: f64,
    pub iterations: usize,
    pub eps: f64,
    pub init: InitMode,
    pub clamp: bool,
    /// Stop once the largest per-iteration change drops below this value.
    pub stop_tolerance: Option<f64>,
}

impl Default for DiffusionParams {
    fn default() -> Self {
        Self {
            dt: 0.24,
            c: 0.75,
            k: 0.05 * 255.0,
            sigma: 1.2,
            rho: 4.5,
            iterations: 2500,
            eps: DEFAULT_EPS,
            init: InitMode::OnionPeel,
            clamp: true,
            stop_tolerance: None,
        }
    }
}

impl DiffusionParams {
    /// Checks parameter ranges. Logs a warning when `dt * c` exceeds
    /// [`STABILITY_LIMIT`].
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad(format!("dt must be > 0, got {}", self.dt));
        }
        if !(self.c > 0.0 && self.c <= 1.0) {
            return bad(format!("c must lie in (0, 1], got {}", self.c));
        }
        if !(self.k > 0.0) || !self.k.is_finite() {
            return bad(format!("k must be > 0, got {}", self.k));
        }
        if !(self.sigma >= 0.0) || !(self.rho >= 0.0) {
            return bad(format!(
                "sigma and rho must be >= 0, got {} and {}",
                self.sigma, self.rho
            ));
        }
        if !(self.eps > 0.0) {
            return bad(format!("eps must be > 0, got {}", self.eps));
        }
        if let Some(tol) = self.stop_tolerance {
            if !(tol > 0.0) {
                return bad(format!("stop tolerance must be > 0, got {tol}"));
            }
        }
        if self.dt * self.c > STABILITY_LIMIT {
            log::warn!(
                "dt*c = {:.4} exceeds {STABILITY_LIMIT}; the explicit scheme may oscillate",
                self.dt * self.c
            );
        }
        Ok(())
    }
}

/// Iteration log of one solver run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunStats {
    pub iterations: usize,
    /// Largest absolute sample change in each iteration.
    pub max_updates: Vec<f64>,
    pub seconds: f64,
}

/// Per-iteration callback: `(iteration, max_update, current_image)`.
pub type Observer<'a> = &'a mut dyn FnMut(usize, f64, &ImageBuffer);

/// Runs `step` up to `iterations` times, recording the largest change per
/// iteration and aborting on non-finite output.
pub(crate) fn iterate(
    solver: &'static str,
    mut current: ImageBuffer,
    iterations: usize,
    stop_tolerance: Option<f64>,
    mut step: impl FnMut(&ImageBuffer) -> ImageBuffer,
    mut observer: Option<Observer<'_>>,
) -> Result<(ImageBuffer, RunStats)> {
    let start = Instant::now();
    let mut stats = RunStats::default();
    for s in 1..=iterations {
        let next = step(&current);
        let mut max_update = 0.0f64;
        for (a, b) in next.data().iter().zip(current.data()) {
            if !a.is_finite() {
                return Err(Error::Divergence { solver, iteration: s });
            }
            max_update = max_update.max((a - b).abs());
        }
        current = next;
        stats.iterations = s;
        stats.max_updates.push(max_update);
        if let Some(obs) = observer.as_mut() {
            obs(s, max_update, &current);
        }
        if stop_tolerance.is_some_and(|tol| max_update < tol) {
            log::debug!("{solver}: converged after {s} iterations");
            break;
        }
    }
    stats.seconds = start.elapsed().as_secs_f64();
    Ok((current, stats))
}

/// Inpainting methods exposed for side-by-side comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Tensor,
    Harmonic,
    Tv,
    Fast,
    Ced,
}

impl Method {
    /// The four hole-filling methods, in comparison-table order.
    pub const INPAINTING: [Method; 4] = [Method::Fast, Method::Tv, Method::Harmonic, Method::Tensor];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Tensor => "tensor",
            Method::Harmonic => "harmonic",
            Method::Tv => "tv",
            Method::Fast => "fast",
            Method::Ced => "ced",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tensor" => Ok(Method::Tensor),
            "harmonic" => Ok(Method::Harmonic),
            "tv" => Ok(Method::Tv),
            "fast" => Ok(Method::Fast),
            "ced" => Ok(Method::Ced),
            other => Err(Error::InvalidParameter(format!("unknown method {other:?}"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Settings shared by every method in a comparison run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub params: DiffusionParams,
    pub tv_eps: f64,
    pub fast_kernel: FastKernel,
    pub ced: crate::tensor::CedParams,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            params: DiffusionParams::default(),
            tv_eps: DEFAULT_TV_EPS,
            fast_kernel: FastKernel::default(),
            ced: Default::default(),
        }
    }
}

/// Runs one inpainting method: hole initialization per `cfg.params.init`,
/// then the method's iteration. Baselines use `cfg.params.dt` and
/// `cfg.params.iterations`.
pub fn run_method(
    method: Method,
    damaged: &ImageBuffer,
    mask: &crate::image::Mask,
    cfg: &SolverConfig,
    observer: Option<Observer<'_>>,
) -> Result<(ImageBuffer, RunStats)> {
    let p = &cfg.params;
    match method {
        Method::Tensor => tensor_inpaint_with(damaged, mask, p, observer),
        Method::Ced => ced_denoise_with(damaged, p, cfg.ced, observer),
        Method::Harmonic | Method::Tv | Method::Fast => {
            p.validate()?;
            let start = initialize_hole(damaged, mask, p.init)?;
            match method {
                Method::Harmonic => {
                    diffusion::harmonic_run(&start, mask, p.dt, p.iterations, p.stop_tolerance, observer)
                }
                Method::Tv => {
                    diffusion::tv_run(&start, mask, p.dt, p.iterations, cfg.tv_eps, p.stop_tolerance, observer)
                }
                _ => fast::fast_run(&start, mask, p.iterations, cfg.fast_kernel, p.stop_tolerance, observer),
            }
        }
    }
}

//! Image inpainting by structure-tensor directed anisotropic diffusion.
//!
//! Hole pixels are diffused only along the local isophote direction, taken as
//! the minor eigenvector of the multichannel structure tensor and weighted by
//! a contrast-dependent gain. The crate also provides harmonic, total
//! variation and fast-convolution inpainting baselines, coherence-enhancing
//! denoising, and the MSE / PSNR / MSSIM metrics used to compare them.
//!
//! Samples are `f64` on the `[0, 255]` scale; images are converted to 8 bits
//! only when written.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod error;
pub mod image;
pub mod inpaint;
pub mod quality;
pub mod stencil;
pub mod synth;
pub mod tensor;

pub use error::{Error, Result};
pub use image::{load_image, mask_from_color, mask_from_file, save_image, ImageBuffer, Mask};
pub use inpaint::{
    ced_denoise, fast_convolution_inpaint, harmonic_inpaint, initialize_hole, nonlinear_diffusion_step, run_method,
    tensor_inpaint, tensor_inpaint_step, tv_inpaint, DiffusionParams, InitMode, Method, RunStats, SolverConfig,
};
pub use quality::{mse, mssim, psnr, report, QualityReport};
pub use tensor::{CedParams, EigenField, TensorField};

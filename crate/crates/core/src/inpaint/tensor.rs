//! Tensor-directed inpainting.
//!
//! Each iteration rebuilds the structure tensor of the current image, takes
//! its minor eigenvector `θ−` (the isophote direction) and advances every
//! hole sample along it:
//!
//! ```text
//! u_i <- u_i + dt * f(λ+, λ−) * θ−ᵀ H_i θ−,    f = c / (1 + sqrt(λ+ + λ−) / k)
//! ```
//!
//! which is the trace form of `div(D ∇u_i)` with the rank-one tensor
//! `D = f θ−θ−ᵀ`. Pixels outside the mask are copied through.

use rayon::prelude::*;

use super::{initialize_hole, iterate, DiffusionParams, Observer, RunStats};
use crate::error::{Error, Result};
use crate::image::{ImageBuffer, Mask};
use crate::stencil::{directional_at, hessian, Hessian};
use crate::tensor::{eigen_decompose, structure_tensor, weight_unchecked};

/// One update of the tensor-directed scheme.
pub fn tensor_inpaint_step(img: &ImageBuffer, mask: &Mask, p: &DiffusionParams) -> Result<ImageBuffer> {
    img.check_mask(mask)?;
    p.validate()?;
    let out = step(img, mask, p)?;
    if out.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence {
            solver: "tensor",
            iteration: 1,
        });
    }
    Ok(out)
}

fn step(img: &ImageBuffer, mask: &Mask, p: &DiffusionParams) -> Result<ImageBuffer> {
    let (w, h, n) = (img.width(), img.height(), img.channels());
    let tf = structure_tensor(img, p.sigma, p.rho)?;
    let ef = eigen_decompose(&tf, p.eps);
    let hessians: Vec<Hessian> = (0..n).map(|c| hessian(&img.channel(c))).collect();
    let u = img.data();
    let mut out = u.to_vec();
    out.par_chunks_mut(w * n).enumerate().for_each(|(y, row)| {
        for x in 0..w {
            let i = y * w + x;
            if !mask.bits()[i] {
                continue;
            }
            let f = weight_unchecked(ef.lam_plus[i], ef.lam_minus[i], p.c, p.k);
            let theta = ef.theta_minus[i];
            for (c, hc) in hessians.iter().enumerate() {
                let mut v = u[i * n + c] + p.dt * f * directional_at(hc, i, theta);
                if p.clamp {
                    v = v.clamp(0.0, 255.0);
                }
                row[x * n + c] = v;
            }
        }
    });
    Ok(ImageBuffer::from_raw_unchecked(w, h, n, out))
}

/// Initializes the hole per `p.init` and applies `p.iterations` steps.
pub fn tensor_inpaint(img: &ImageBuffer, mask: &Mask, p: &DiffusionParams) -> Result<(ImageBuffer, RunStats)> {
    tensor_inpaint_with(img, mask, p, None)
}

/// [`tensor_inpaint`] with a per-iteration observer.
pub fn tensor_inpaint_with(
    img: &ImageBuffer,
    mask: &Mask,
    p: &DiffusionParams,
    observer: Option<Observer<'_>>,
) -> Result<(ImageBuffer, RunStats)> {
    p.validate()?;
    let start = initialize_hole(img, mask, p.init)?;
    // The only fallible part of `step` is the sigma/rho validation done above.
    iterate(
        "tensor",
        start,
        p.iterations,
        p.stop_tolerance,
        |u| step(u, mask, p).expect("parameters validated"),
        observer,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inpaint::InitMode;
    use crate::stencil::{directional_second_derivative, Channel};
    use crate::tensor::{diffusion_weight, DEFAULT_EPS};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(iterations: usize) -> DiffusionParams {
        DiffusionParams {
            iterations,
            ..DiffusionParams::default()
        }
    }

    #[test]
    fn constant_image_is_fixed_point() {
        let img = ImageBuffer::filled(16, 16, 3, 80.0).unwrap();
        let mask = Mask::rect(16, 16, 4, 4, 6, 6);
        assert_eq!(tensor_inpaint_step(&img, &mask, &params(1)).unwrap(), img);
        let (out, stats) = tensor_inpaint(&img, &mask, &params(20)).unwrap();
        assert_eq!(out, img);
        assert_eq!(stats.iterations, 20);
        assert!(stats.max_updates.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn empty_mask_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let img = ImageBuffer::from_fn(12, 12, 3, |_, _, _| rng.gen_range(0.0..255.0)).unwrap();
        let out = tensor_inpaint_step(&img, &Mask::empty(12, 12), &params(1)).unwrap();
        assert!(out
            .data()
            .iter()
            .zip(img.data())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn zero_iterations_returns_initialization() {
        let img = ImageBuffer::from_fn(16, 16, 1, |x, _, _| 10.0 * x as f64).unwrap();
        let mask = Mask::rect(16, 16, 5, 5, 4, 4);
        let (out, stats) = tensor_inpaint(&img, &mask, &params(0)).unwrap();
        assert_eq!(out, initialize_hole(&img, &mask, InitMode::OnionPeel).unwrap());
        assert_eq!(stats.iterations, 0);
    }

    #[test]
    fn single_step_matches_composed_reference() {
        // Ramp with curvature so the directional derivative is nonzero.
        let img = ImageBuffer::from_fn(32, 32, 1, |x, y, _| {
            let (x, y) = (x as f64, y as f64);
            3.0 * x + 0.05 * (x - 16.0) * (y - 12.0) + 0.02 * y * y
        })
        .unwrap();
        let mask = Mask::rect(32, 32, 14, 14, 4, 4);
        let p = DiffusionParams {
            clamp: false,
            ..params(1)
        };
        let out = tensor_inpaint_step(&img, &mask, &p).unwrap();

        let tf = structure_tensor(&img, p.sigma, p.rho).unwrap();
        let ef = eigen_decompose(&tf, DEFAULT_EPS);
        let ch: Channel = img.channel(0);
        let h = hessian(&ch);
        let utt = directional_second_derivative(&h, &ef.theta_minus).unwrap();
        let mut changed = 0;
        for y in 0..32 {
            for x in 0..32 {
                let i = y * 32 + x;
                let want = if mask.get(x, y) {
                    let f = diffusion_weight(ef.lam_plus[i], ef.lam_minus[i], p.c, p.k).unwrap();
                    img.get(x, y, 0) + p.dt * f * utt.data()[i]
                } else {
                    img.get(x, y, 0)
                };
                assert_eq!(out.get(x, y, 0), want, "({x},{y})");
                if out.get(x, y, 0) != img.get(x, y, 0) {
                    changed += 1;
                }
            }
        }
        assert_eq!(changed, 16);
    }

    #[test]
    fn clamping_bounds_output() {
        let img = ImageBuffer::from_fn(16, 16, 1, |x, y, _| if (x + y) % 2 == 0 { 0.0 } else { 255.0 }).unwrap();
        let mask = Mask::rect(16, 16, 3, 3, 10, 10);
        let p = DiffusionParams {
            init: InitMode::KeepDamaged,
            dt: 2.0,
            c: 1.0,
            sigma: 0.0,
            rho: 0.0,
            ..params(5)
        };
        let (out, _) = tensor_inpaint(&img, &mask, &p).unwrap();
        let (lo, hi) = out.value_range();
        assert!(lo >= 0.0 && hi <= 255.0);
    }

    #[test]
    fn recomputes_tensor_from_current_image() {
        // With the tensor frozen at the initial image, two single steps would
        // not compose into the same result as a two-iteration run.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let img = ImageBuffer::from_fn(20, 20, 3, |_, _, _| rng.gen_range(0.0..255.0)).unwrap();
        let mask = Mask::rect(20, 20, 6, 6, 8, 8);
        let p = DiffusionParams {
            init: InitMode::KeepDamaged,
            ..params(2)
        };
        let (two, _) = tensor_inpaint(&img, &mask, &p).unwrap();
        let once = tensor_inpaint_step(&img, &mask, &p).unwrap();
        let twice = tensor_inpaint_step(&once, &mask, &p).unwrap();
        assert_eq!(two, twice);
    }

    #[test]
    fn divergence_is_reported() {
        let img = ImageBuffer::filled(8, 8, 1, 1.0).unwrap();
        let poison = |u: &ImageBuffer| {
            let mut v = u.clone();
            v.data_mut()[0] = f64::NAN;
            v
        };
        let err = iterate("tensor", img, 3, None, poison, None).unwrap_err();
        assert!(matches!(err, Error::Divergence { iteration: 1, .. }));
    }
}

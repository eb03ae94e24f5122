//! Coherence-enhancing diffusion `∂t u_i = div(D(J) ∇u_i)` (unmasked).
//!
//! `D` shares the eigenvectors of the structure tensor, with eigenvalue `c1`
//! across the structure and `c1 + (1 - c1) exp(-c2 / (λ+ - λ−)²)` along it.
//! The divergence uses half-pixel fluxes with face-averaged tensor entries;
//! cross derivatives on a face average the central differences of its two
//! pixels. Border faces carry no flux.

use rayon::prelude::*;

use super::{iterate, DiffusionParams, Observer, RunStats};
use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::stencil::gradient;
use crate::tensor::{assemble_tensor, ced_eigenvalues, eigen_decompose, structure_tensor, CedParams, SymTensor};

fn diffusion_tensors(img: &ImageBuffer, p: &DiffusionParams, cp: CedParams) -> Result<Vec<SymTensor>> {
    let tf = structure_tensor(img, p.sigma, p.rho)?;
    let ef = eigen_decompose(&tf, p.eps);
    Ok((0..ef.lam_plus.len())
        .into_par_iter()
        .map(|i| {
            let e = ef.at(i);
            let (l1, l2) = ced_eigenvalues(e.lam_plus, e.lam_minus, cp);
            assemble_tensor(l1, l2, e.theta_minus)
        })
        .collect())
}

pub(crate) fn ced_step_with(img: &ImageBuffer, d: &[SymTensor], dt: f64, clamp: bool) -> ImageBuffer {
    let (w, h, n) = (img.width(), img.height(), img.channels());
    let mut out = img.data().to_vec();
    for c in 0..n {
        let ch = img.channel(c);
        let u = ch.data();
        let (gx, gy) = gradient(&ch);
        let (ux, uy) = (gx.data(), gy.data());
        let face_x = |i: usize| {
            // face between i and i+1
            let d11 = 0.5 * (d[i].a11 + d[i + 1].a11);
            let d12 = 0.5 * (d[i].a12 + d[i + 1].a12);
            d11 * (u[i + 1] - u[i]) + d12 * 0.5 * (uy[i] + uy[i + 1])
        };
        let face_y = |i: usize| {
            // face between i and i+w
            let d12 = 0.5 * (d[i].a12 + d[i + w].a12);
            let d22 = 0.5 * (d[i].a22 + d[i + w].a22);
            d12 * 0.5 * (ux[i] + ux[i + w]) + d22 * (u[i + w] - u[i])
        };
        let updated: Vec<f64> = (0..w * h)
            .into_par_iter()
            .map(|i| {
                let (x, y) = (i % w, i / w);
                let fx_plus = if x + 1 < w { face_x(i) } else { 0.0 };
                let fx_minus = if x > 0 { face_x(i - 1) } else { 0.0 };
                let fy_plus = if y + 1 < h { face_y(i) } else { 0.0 };
                let fy_minus = if y > 0 { face_y(i - w) } else { 0.0 };
                let v = u[i] + dt * ((fx_plus - fx_minus) + (fy_plus - fy_minus));
                if clamp {
                    v.clamp(0.0, 255.0)
                } else {
                    v
                }
            })
            .collect();
        for (i, v) in updated.into_iter().enumerate() {
            out[i * n + c] = v;
        }
    }
    ImageBuffer::from_raw_unchecked(w, h, n, out)
}

/// One explicit coherence-enhancing diffusion step over the whole image.
pub fn ced_denoise_step(img: &ImageBuffer, p: &DiffusionParams, cp: CedParams) -> Result<ImageBuffer> {
    p.validate()?;
    let d = diffusion_tensors(img, p, cp)?;
    let out = ced_step_with(img, &d, p.dt, p.clamp);
    if out.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence {
            solver: "ced",
            iteration: 1,
        });
    }
    Ok(out)
}

/// `p.iterations` coherence-enhancing diffusion steps; the tensor is rebuilt
/// every step.
pub fn ced_denoise(img: &ImageBuffer, p: &DiffusionParams, cp: CedParams) -> Result<ImageBuffer> {
    Ok(ced_denoise_with(img, p, cp, None)?.0)
}

pub fn ced_denoise_with(
    img: &ImageBuffer,
    p: &DiffusionParams,
    cp: CedParams,
    observer: Option<Observer<'_>>,
) -> Result<(ImageBuffer, RunStats)> {
    p.validate()?;
    iterate(
        "ced",
        img.clone(),
        p.iterations,
        p.stop_tolerance,
        |u| {
            let d = diffusion_tensors(u, p, cp).expect("parameters validated");
            ced_step_with(u, &d, p.dt, p.clamp)
        },
        observer,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inpaint::diffusion::diffusion_step;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Box-Muller
    fn gaussian(rng: &mut impl Rng, sd: f64) -> f64 {
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen();
        sd * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    #[test]
    fn constant_is_fixed() {
        let img = ImageBuffer::filled(12, 12, 3, 60.0).unwrap();
        let p = DiffusionParams {
            iterations: 10,
            ..Default::default()
        };
        assert_eq!(ced_denoise(&img, &p, CedParams::default()).unwrap(), img);
    }

    #[test]
    fn isotropic_tensor_reduces_to_scaled_heat_step() {
        // Channels 0 and 1 are orthogonal ramps, so J = A² Id in the interior;
        // channel 2 is a faint texture that barely perturbs J.
        let a = 40.0;
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let img = ImageBuffer::from_fn(24, 24, 3, |x, y, c| match c {
            0 => a * x as f64,
            1 => a * y as f64,
            _ => 100.0 + rng.gen_range(-1e-3..1e-3),
        })
        .unwrap();
        let p = DiffusionParams {
            sigma: 0.0,
            rho: 0.0,
            clamp: false,
            ..Default::default()
        };
        let cp = CedParams::new(0.3, 1.0).unwrap();
        let out = ced_denoise_step(&img, &p, cp).unwrap();
        let heat = diffusion_step(&img, None, &|_| cp.c1(), p.dt);
        for y in 2..22 {
            for x in 2..22 {
                let (got, want) = (out.get(x, y, 2), heat.get(x, y, 2));
                assert!((got - want).abs() < 1e-9, "({x},{y}) {got} vs {want}");
            }
        }
    }

    #[test]
    fn smooths_along_stripes_and_keeps_contrast() {
        // Horizontal bands of period 16 plus gaussian noise.
        let (w, h) = (64, 64);
        let band = |y: usize| if (y / 8).is_multiple_of(2) { 80.0 } else { 176.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let img = ImageBuffer::from_fn(w, h, 1, |_, y, _| band(y) + gaussian(&mut rng, 12.0)).unwrap();

        let stats = |im: &ImageBuffer| {
            // Variance along rows (stripe direction), averaged over rows.
            let mut var_sum = 0.0;
            let (mut hi, mut lo, mut nh, mut nl) = (0.0, 0.0, 0.0, 0.0);
            for y in 0..h {
                let row: Vec<f64> = (0..w).map(|x| im.get(x, y, 0)).collect();
                let mean = row.iter().sum::<f64>() / w as f64;
                var_sum += row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / w as f64;
                if band(y) > 100.0 {
                    hi += mean;
                    nh += 1.0;
                } else {
                    lo += mean;
                    nl += 1.0;
                }
            }
            (var_sum / h as f64, hi / nh - lo / nl)
        };
        let p = DiffusionParams {
            iterations: 20,
            sigma: 1.0,
            rho: 3.0,
            ..Default::default()
        };
        let out = ced_denoise(&img, &p, CedParams::default()).unwrap();
        let (var0, contrast0) = stats(&img);
        let (var1, contrast1) = stats(&out);
        assert!(var1 < var0, "along-stripe variance {var0} -> {var1}");
        assert!(contrast1 > 0.9 * contrast0, "contrast {contrast0} -> {contrast1}");
    }
}

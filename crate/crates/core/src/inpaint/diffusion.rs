//! Scalar-diffusivity flows `∂t u_i = div(g(Σ_k |∇u_k|²) ∇u_i)` in flux form,
//! and the harmonic and total-variation inpainting baselines built on them.

use rayon::prelude::*;

use super::{iterate, Observer, RunStats};
use crate::error::{Error, Result};
use crate::image::{ImageBuffer, Mask};
use crate::stencil::reflect;

pub const DEFAULT_TV_EPS: f64 = 1.0;

/// Total-variation diffusivity `1 / sqrt(s + eps²)` of the squared gradient norm `s`.
pub fn tv_diffusivity(tv_eps: f64) -> impl Fn(f64) -> f64 + Sync {
    let e2 = tv_eps * tv_eps;
    move |s| 1.0 / (s + e2).sqrt()
}

/// One explicit step of vector-coupled nonlinear diffusion.
///
/// `g` receives the channel-summed squared central-difference gradient at each
/// pixel. Fluxes live on half-pixel faces: `F(x+½) = ½(g(x) + g(x+1)) (u(x+1) - u(x))`,
/// and faces on the image border carry no flux. With a mask, only hole pixels
/// are updated.
pub fn nonlinear_diffusion_step<G>(img: &ImageBuffer, mask: Option<&Mask>, g: G, dt: f64) -> Result<ImageBuffer>
where
    G: Fn(f64) -> f64 + Sync,
{
    if let Some(m) = mask {
        img.check_mask(m)?;
    }
    let out = diffusion_step(img, mask, &g, dt);
    if out.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence {
            solver: "nonlinear diffusion",
            iteration: 1,
        });
    }
    Ok(out)
}

fn diffusivity_field<G: Fn(f64) -> f64 + Sync>(img: &ImageBuffer, g: &G) -> Vec<f64> {
    let (w, h, n) = (img.width(), img.height(), img.channels());
    let data = img.data();
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let ym = reflect(y as isize - 1, h);
        let yp = reflect(y as isize + 1, h);
        for (x, gv) in row.iter_mut().enumerate() {
            let xm = reflect(x as isize - 1, w);
            let xp = reflect(x as isize + 1, w);
            let mut s = 0.0;
            for c in 0..n {
                let ux = (data[(y * w + xp) * n + c] - data[(y * w + xm) * n + c]) / 2.0;
                let uy = (data[(yp * w + x) * n + c] - data[(ym * w + x) * n + c]) / 2.0;
                s += ux * ux + uy * uy;
            }
            *gv = g(s);
        }
    });
    out
}

pub(crate) fn diffusion_step<G: Fn(f64) -> f64 + Sync>(
    img: &ImageBuffer,
    mask: Option<&Mask>,
    g: &G,
    dt: f64,
) -> ImageBuffer {
    let (w, h, n) = (img.width(), img.height(), img.channels());
    let gf = diffusivity_field(img, g);
    let u = img.data();
    let mut out = u.to_vec();
    out.par_chunks_mut(w * n).enumerate().for_each(|(y, row)| {
        for x in 0..w {
            let i = y * w + x;
            if mask.is_some_and(|m| !m.bits()[i]) {
                continue;
            }
            for c in 0..n {
                let at = |j: usize| u[j * n + c];
                let fx_plus = if x + 1 < w {
                    0.5 * (gf[i] + gf[i + 1]) * (at(i + 1) - at(i))
                } else {
                    0.0
                };
                let fx_minus = if x > 0 {
                    0.5 * (gf[i - 1] + gf[i]) * (at(i) - at(i - 1))
                } else {
                    0.0
                };
                let fy_plus = if y + 1 < h {
                    0.5 * (gf[i] + gf[i + w]) * (at(i + w) - at(i))
                } else {
                    0.0
                };
                let fy_minus = if y > 0 {
                    0.5 * (gf[i - w] + gf[i]) * (at(i) - at(i - w))
                } else {
                    0.0
                };
                let div = (fx_plus - fx_minus) + (fy_plus - fy_minus);
                row[x * n + c] = at(i) + dt * div;
            }
        }
    });
    ImageBuffer::from_raw_unchecked(w, h, n, out)
}

/// Harmonic inpainting: masked heat flow (`g ≡ 1`) for `iterations` steps.
pub fn harmonic_inpaint(img: &ImageBuffer, mask: &Mask, dt: f64, iterations: usize) -> Result<ImageBuffer> {
    Ok(harmonic_run(img, mask, dt, iterations, None, None)?.0)
}

pub(crate) fn harmonic_run(
    img: &ImageBuffer,
    mask: &Mask,
    dt: f64,
    iterations: usize,
    stop_tolerance: Option<f64>,
    observer: Option<Observer<'_>>,
) -> Result<(ImageBuffer, RunStats)> {
    img.check_mask(mask)?;
    check_dt(dt)?;
    if dt > 0.25 {
        log::warn!("harmonic dt = {dt} exceeds the 0.25 stability bound of the 5-point stencil");
    }
    let g = |_: f64| 1.0;
    iterate(
        "harmonic",
        img.clone(),
        iterations,
        stop_tolerance,
        |u| diffusion_step(u, Some(mask), &g, dt),
        observer,
    )
}

/// Total-variation inpainting: masked flow with `g = 1 / sqrt(|∇u|² + tv_eps²)`.
pub fn tv_inpaint(img: &ImageBuffer, mask: &Mask, dt: f64, iterations: usize, tv_eps: f64) -> Result<ImageBuffer> {
    Ok(tv_run(img, mask, dt, iterations, tv_eps, None, None)?.0)
}

pub(crate) fn tv_run(
    img: &ImageBuffer,
    mask: &Mask,
    dt: f64,
    iterations: usize,
    tv_eps: f64,
    stop_tolerance: Option<f64>,
    observer: Option<Observer<'_>>,
) -> Result<(ImageBuffer, RunStats)> {
    img.check_mask(mask)?;
    check_dt(dt)?;
    if !(tv_eps > 0.0) {
        return Err(Error::InvalidParameter(format!("tv eps must be > 0, got {tv_eps}")));
    }
    // The diffusivity peaks at 1/tv_eps in flat regions.
    if dt > 0.25 * tv_eps {
        log::warn!("tv dt = {dt} exceeds the stability bound tv_eps/4 = {}", 0.25 * tv_eps);
    }
    let g = tv_diffusivity(tv_eps);
    iterate(
        "tv",
        img.clone(),
        iterations,
        stop_tolerance,
        |u| diffusion_step(u, Some(mask), &g, dt),
        observer,
    )
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")))
    }
}

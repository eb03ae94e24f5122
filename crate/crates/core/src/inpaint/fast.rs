//! Fast convolution inpainting: hole pixels are repeatedly replaced by a
//! weighted average of their 8 neighbors (zero-weight center).

use rayon::prelude::*;

use super::{iterate, Observer, RunStats};
use crate::error::{Error, Result};
use crate::image::{ImageBuffer, Mask};
use crate::stencil::reflect;

/// 3x3 averaging kernel with corner weight `a`, edge weight `b`, center 0
/// and `4a + 4b = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FastKernel {
    corner: f64,
    edge: f64,
}

impl FastKernel {
    /// Builds the kernel from its corner weight; the edge weight is `1/4 - a`.
    pub fn from_corner(corner: f64) -> Result<Self> {
        if !(0.0..=0.25).contains(&corner) {
            return Err(Error::InvalidParameter(format!(
                "corner weight must lie in [0, 0.25], got {corner}"
            )));
        }
        Ok(Self {
            corner,
            edge: 0.25 - corner,
        })
    }

    pub fn corner(&self) -> f64 {
        self.corner
    }

    pub fn edge(&self) -> f64 {
        self.edge
    }
}

impl Default for FastKernel {
    /// The classic diffusion kernel `a = 0.073235`, `b = 0.176765`.
    fn default() -> Self {
        Self::from_corner(0.073235).unwrap()
    }
}

fn fast_step(img: &ImageBuffer, mask: &Mask, kernel: FastKernel) -> ImageBuffer {
    let (w, h, n) = (img.width(), img.height(), img.channels());
    let u = img.data();
    let mut out = u.to_vec();
    out.par_chunks_mut(w * n).enumerate().for_each(|(y, row)| {
        let ym = reflect(y as isize - 1, h);
        let yp = reflect(y as isize + 1, h);
        for x in 0..w {
            if !mask.bits()[y * w + x] {
                continue;
            }
            let xm = reflect(x as isize - 1, w);
            let xp = reflect(x as isize + 1, w);
            for c in 0..n {
                // Increment form: equal neighbors leave the value bit-identical.
                let u0 = u[(y * w + x) * n + c];
                let d = |xx: usize, yy: usize| u[(yy * w + xx) * n + c] - u0;
                let corners = d(xm, ym) + d(xp, ym) + d(xm, yp) + d(xp, yp);
                let edges = d(x, ym) + d(xm, y) + d(xp, y) + d(x, yp);
                row[x * n + c] = u0 + (kernel.corner * corners + kernel.edge * edges);
            }
        }
    });
    ImageBuffer::from_raw_unchecked(w, h, n, out)
}

/// Runs `iterations` sweeps of the averaging kernel over the hole.
pub fn fast_convolution_inpaint(
    img: &ImageBuffer,
    mask: &Mask,
    iterations: usize,
    kernel: FastKernel,
) -> Result<ImageBuffer> {
    Ok(fast_run(img, mask, iterations, kernel, None, None)?.0)
}

pub(crate) fn fast_run(
    img: &ImageBuffer,
    mask: &Mask,
    iterations: usize,
    kernel: FastKernel,
    stop_tolerance: Option<f64>,
    observer: Option<Observer<'_>>,
) -> Result<(ImageBuffer, RunStats)> {
    img.check_mask(mask)?;
    iterate(
        "fast",
        img.clone(),
        iterations,
        stop_tolerance,
        |u| fast_step(u, mask, kernel),
        observer,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_is_normalized() {
        let k = FastKernel::default();
        assert_eq!(4.0 * k.corner() + 4.0 * k.edge(), 1.0);
        assert_eq!(k.edge(), 0.25 - 0.073235);
        for a in [0.0, 0.0625, 0.1, 0.25] {
            let k = FastKernel::from_corner(a).unwrap();
            assert_eq!(4.0 * k.corner() + 4.0 * k.edge(), 1.0);
        }
        assert!(FastKernel::from_corner(0.3).is_err());
    }

    #[test]
    fn constant_is_fixed() {
        let img = ImageBuffer::filled(9, 9, 3, 17.0).unwrap();
        let mask = Mask::rect(9, 9, 2, 2, 4, 4);
        let out = fast_convolution_inpaint(&img, &mask, 30, FastKernel::default()).unwrap();
        assert!(out.data().iter().all(|&v| (v - 17.0).abs() < 1e-12));
    }

    #[test]
    fn single_pixel_hole_is_weighted_mean_after_one_step() {
        let vals = [1.0, 2.0, 3.0, 4.0, 999.0, 6.0, 7.0, 8.0, 9.0];
        let img = ImageBuffer::new(3, 3, 1, vals.to_vec()).unwrap();
        let mask = Mask::rect(3, 3, 1, 1, 1, 1);
        let k = FastKernel::default();
        let out = fast_convolution_inpaint(&img, &mask, 1, k).unwrap();
        let (a, b) = (0.073235, 0.25 - 0.073235);
        let want = a * (1.0 + 3.0 + 7.0 + 9.0) + b * (2.0 + 4.0 + 6.0 + 8.0);
        assert!((out.get(1, 1, 0) - want).abs() < 1e-12);
        // A lone hole pixel depends only on known neighbors, so it is already converged.
        let again = fast_convolution_inpaint(&img, &mask, 5, k).unwrap();
        assert_eq!(again.get(1, 1, 0), out.get(1, 1, 0));
        for i in [0, 1, 2, 3, 5, 6, 7, 8] {
            assert_eq!(out.data()[i], vals[i]);
        }
    }
}

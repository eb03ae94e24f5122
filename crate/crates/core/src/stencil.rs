//! Finite-difference stencils and separable Gaussian smoothing on single
//! channels.
//!
//! Grid convention: `x` is the column index (increasing to the right), `y`
//! the row index (increasing downward). Every operator reads outside the
//! image through half-sample mirror reflection (`-1 -> 0`, `n -> n-1`), so
//! derivative stencils vanish on constants and smoothing preserves mass.
//!
//! Rows are evaluated in parallel; each output sample is a fixed-order sum
//! of its own inputs, so results do not depend on the thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Unit 2-vector `(x, y)`.
pub type Direction = [f64; 2];

/// One plane of samples, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Channel {
    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height, "channel length must equal width*height");
        Self { width, height, data }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::from_vec(width, height, vec![0.0; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    /// Evaluates `f(x, y)` for every pixel, rows in parallel.
    pub(crate) fn par_from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64 + Sync) -> Self {
        let mut data = vec![0.0; width * height];
        data.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
            for (x, out) in row.iter_mut().enumerate() {
                *out = f(x, y);
            }
        });
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Sample at a possibly out-of-range position, mirrored back inside.
    #[inline]
    pub fn get_mirrored(&self, x: isize, y: isize) -> f64 {
        self.get(reflect(x, self.width), reflect(y, self.height))
    }

    pub fn same_shape(&self, other: &Channel) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Half-sample symmetric reflection of index `i` into `0..n`.
#[inline]
pub fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let m = i.rem_euclid(2 * n);
    (if m >= n { 2 * n - 1 - m } else { m }) as usize
}

/// Symmetric, normalized 1-D convolution kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel1D {
    radius: usize,
    weights: Vec<f64>,
}

impl Kernel1D {
    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_identity(&self) -> bool {
        self.radius == 0
    }
}

/// Sampled Gaussian truncated at `ceil(3 sigma)` and renormalized to unit sum.
pub fn gaussian_kernel(sigma: f64) -> Result<Kernel1D> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "gaussian sigma must be finite and >= 0, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(Kernel1D {
            radius: 0,
            weights: vec![1.0],
        });
    }
    let radius = (3.0 * sigma).ceil() as usize;
    let denom = 2.0 * sigma * sigma;
    let mut weights: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            (-d * d / denom).exp()
        })
        .collect();
    let sum: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= sum);
    // Summation is not symmetric in floating point; mirror to keep w[i] == w[2r-i] exact.
    for i in 0..radius {
        weights[2 * radius - i] = weights[i];
    }
    Ok(Kernel1D { radius, weights })
}

/// Applies `kernel` along rows, then along columns.
pub fn convolve_separable(ch: &Channel, kernel: &Kernel1D) -> Channel {
    if kernel.is_identity() {
        return ch.clone();
    }
    let (w, h) = (ch.width, ch.height);
    let r = kernel.radius as isize;
    let wts = &kernel.weights;
    let horizontal = Channel::par_from_fn(w, h, |x, y| {
        let row = &ch.data[y * w..(y + 1) * w];
        let mut acc = 0.0;
        for (k, wt) in wts.iter().enumerate() {
            acc += wt * row[reflect(x as isize + k as isize - r, w)];
        }
        acc
    });
    Channel::par_from_fn(w, h, |x, y| {
        let mut acc = 0.0;
        for (k, wt) in wts.iter().enumerate() {
            acc += wt * horizontal.data[reflect(y as isize + k as isize - r, h) * w + x];
        }
        acc
    })
}

pub fn convolve_gaussian(ch: &Channel, sigma: f64) -> Result<Channel> {
    Ok(convolve_separable(ch, &gaussian_kernel(sigma)?))
}

/// Central differences `(ux, uy)`.
pub fn gradient(ch: &Channel) -> (Channel, Channel) {
    let (w, h) = (ch.width, ch.height);
    let ux = Channel::par_from_fn(w, h, |x, y| {
        let (x, y) = (x as isize, y as isize);
        (ch.get_mirrored(x + 1, y) - ch.get_mirrored(x - 1, y)) / 2.0
    });
    let uy = Channel::par_from_fn(w, h, |x, y| {
        let (x, y) = (x as isize, y as isize);
        (ch.get_mirrored(x, y + 1) - ch.get_mirrored(x, y - 1)) / 2.0
    });
    (ux, uy)
}

/// Second derivatives of a channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Hessian {
    pub uxx: Channel,
    pub uxy: Channel,
    pub uyy: Channel,
}

pub fn hessian(ch: &Channel) -> Hessian {
    let (w, h) = (ch.width, ch.height);
    let at = |x: usize, y: usize, dx: isize, dy: isize| ch.get_mirrored(x as isize + dx, y as isize + dy);
    let uxx = Channel::par_from_fn(w, h, |x, y| at(x, y, 1, 0) - 2.0 * at(x, y, 0, 0) + at(x, y, -1, 0));
    let uyy = Channel::par_from_fn(w, h, |x, y| at(x, y, 0, 1) - 2.0 * at(x, y, 0, 0) + at(x, y, 0, -1));
    let uxy = Channel::par_from_fn(w, h, |x, y| {
        (at(x, y, 1, 1) + at(x, y, -1, -1) - at(x, y, 1, -1) - at(x, y, -1, 1)) / 4.0
    });
    Hessian { uxx, uxy, uyy }
}

/// Second derivative along a per-pixel direction: `θᵀ H θ`.
pub fn directional_second_derivative(h: &Hessian, theta: &[Direction]) -> Result<Channel> {
    let (w, ht) = (h.uxx.width, h.uxx.height);
    if theta.len() != w * ht {
        return Err(Error::mismatch(
            format!("{} directions", w * ht),
            format!("{} directions", theta.len()),
        ));
    }
    if let Some(i) = theta
        .iter()
        .position(|t| ((t[0] * t[0] + t[1] * t[1]).sqrt() - 1.0).abs() > 1e-6)
    {
        return Err(Error::InvalidParameter(format!(
            "direction at pixel {i} is not unit length: {:?}",
            theta[i]
        )));
    }
    Ok(Channel::par_from_fn(w, ht, |x, y| {
        let i = y * w + x;
        directional_at(h, i, theta[i])
    }))
}

#[inline]
pub(crate) fn directional_at(h: &Hessian, i: usize, t: Direction) -> f64 {
    t[0] * t[0] * h.uxx.data[i] + 2.0 * t[0] * t[1] * h.uxy.data[i] + t[1] * t[1] * h.uyy.data[i]
}

//! Structure tensor fields, their closed-form eigensystems, and the
//! diffusion weights built from them.
//!
//! For a multichannel image the structure tensor sums the outer products of
//! the presmoothed channel gradients and integrates the sum with a second
//! Gaussian:
//!
//! ```text
//! J = K_rho * sum_i (grad u_i,sigma)(grad u_i,sigma)^T = [[j11, j12], [j12, j22]]
//! ```
//!
//! Its larger eigenvalue `λ+` measures contrast across the dominant
//! orientation; the eigenvector `θ−` of the smaller eigenvalue follows the
//! isophotes.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::stencil::{convolve_gaussian, gradient, Channel, Direction};

/// Default degeneracy threshold for [`eigen_decompose`], in squared intensity units.
pub const DEFAULT_EPS: f64 = 1e-12;

/// Symmetric 2x2 matrix `[[a11, a12], [a12, a22]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymTensor {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl SymTensor {
    pub const fn new(a11: f64, a12: f64, a22: f64) -> Self {
        Self { a11, a12, a22 }
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn apply(&self, v: Direction) -> Direction {
        [self.a11 * v[0] + self.a12 * v[1], self.a12 * v[0] + self.a22 * v[1]]
    }
}

/// Eigensystem of one symmetric 2x2 tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigen2 {
    pub lam_plus: f64,
    pub lam_minus: f64,
    /// Unit eigenvector of `lam_minus`, canonicalized to `y >= 0` (and `x >= 0` when `y == 0`).
    pub theta_minus: Direction,
}

impl Eigen2 {
    /// Unit eigenvector of `lam_plus`, the perpendicular `(-θ−y, θ−x)`.
    pub fn theta_plus(&self) -> Direction {
        perp(self.theta_minus)
    }

    /// `λ+ θ+θ+ᵀ + λ− θ−θ−ᵀ`.
    pub fn reconstruct(&self) -> SymTensor {
        assemble_tensor(self.lam_plus, self.lam_minus, self.theta_minus)
    }
}

#[inline]
pub fn perp(v: Direction) -> Direction {
    [-v[1], v[0]]
}

fn canonical(v: Direction) -> Direction {
    if v[1] < 0.0 || (v[1] == 0.0 && v[0] < 0.0) {
        [-v[0], -v[1]]
    } else {
        v
    }
}

/// Closed-form eigensystem of a symmetric 2x2 tensor.
///
/// Eigenvalues are `(tr ± s) / 2` with `s = sqrt((a11 - a22)² + 4 a12²)`.
/// The minor eigenvector is `(-(a22 - a11 + s), 2 a12)` normalized; when
/// `a11 > a22` the first component cancels, so the same direction is formed
/// as `(-2 a12, a11 - a22 + s)` instead. When `|a12| < eps` the eigenvectors
/// are taken axis-aligned: `(0, 1)` if `a11 >= a22` (which also covers the
/// isotropic case), else `(1, 0)`.
pub fn eigen2(t: SymTensor, eps: f64) -> Eigen2 {
    let SymTensor { a11, a12, a22 } = t;
    let diff = a11 - a22;
    let s = (diff * diff + 4.0 * a12 * a12).sqrt();
    let tr = a11 + a22;
    let lam_plus = 0.5 * (tr + s);
    let lam_minus = 0.5 * (tr - s);

    let theta_minus = if a12.abs() < eps {
        if a11 >= a22 || diff.abs() < eps {
            [0.0, 1.0]
        } else {
            [1.0, 0.0]
        }
    } else {
        let v = if diff <= 0.0 {
            [-(a22 - a11 + s), 2.0 * a12]
        } else {
            [-2.0 * a12, diff + s]
        };
        let n = v[0].hypot(v[1]);
        canonical([v[0] / n, v[1] / n])
    };
    Eigen2 {
        lam_plus,
        lam_minus,
        theta_minus,
    }
}

/// Per-pixel structure tensor components.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    pub j11: Channel,
    pub j12: Channel,
    pub j22: Channel,
}

impl TensorField {
    pub fn width(&self) -> usize {
        self.j11.width()
    }

    pub fn height(&self) -> usize {
        self.j11.height()
    }

    #[inline]
    pub fn at(&self, i: usize) -> SymTensor {
        SymTensor::new(self.j11.data()[i], self.j12.data()[i], self.j22.data()[i])
    }

    /// Positive semidefinite up to smoothing rounding, at every pixel.
    pub fn is_psd(&self) -> bool {
        (0..self.j11.data().len()).all(|i| {
            let t = self.at(i);
            let tr = t.trace();
            t.a11 >= -1e-9 && t.a22 >= -1e-9 && t.a11 * t.a22 - t.a12 * t.a12 >= -1e-6 * tr * tr
        })
    }
}

/// Per-pixel eigensystem of a [`TensorField`].
#[derive(Debug, Clone, PartialEq)]
pub struct EigenField {
    pub width: usize,
    pub height: usize,
    pub lam_plus: Vec<f64>,
    pub lam_minus: Vec<f64>,
    pub theta_minus: Vec<Direction>,
}

impl EigenField {
    #[inline]
    pub fn at(&self, i: usize) -> Eigen2 {
        Eigen2 {
            lam_plus: self.lam_plus[i],
            lam_minus: self.lam_minus[i],
            theta_minus: self.theta_minus[i],
        }
    }
}

/// Structure tensor of `img`: presmooth each channel with `K_sigma`,
/// differentiate, sum the gradient outer products over channels, then
/// integrate each component with `K_rho`.
pub fn structure_tensor(img: &ImageBuffer, sigma: f64, rho: f64) -> Result<TensorField> {
    if !(rho >= 0.0) {
        return Err(Error::InvalidParameter(format!("rho must be >= 0, got {rho}")));
    }
    let (w, h) = (img.width(), img.height());
    let mut s11 = vec![0.0; w * h];
    let mut s12 = vec![0.0; w * h];
    let mut s22 = vec![0.0; w * h];
    for c in 0..img.channels() {
        let smoothed = convolve_gaussian(&img.channel(c), sigma)?;
        let (gx, gy) = gradient(&smoothed);
        for (i, (&ux, &uy)) in gx.data().iter().zip(gy.data()).enumerate() {
            s11[i] += ux * ux;
            s12[i] += ux * uy;
            s22[i] += uy * uy;
        }
    }
    Ok(TensorField {
        j11: convolve_gaussian(&Channel::from_vec(w, h, s11), rho)?,
        j12: convolve_gaussian(&Channel::from_vec(w, h, s12), rho)?,
        j22: convolve_gaussian(&Channel::from_vec(w, h, s22), rho)?,
    })
}

pub fn eigen_decompose(tf: &TensorField, eps: f64) -> EigenField {
    let n = tf.j11.data().len();
    let eig: Vec<Eigen2> = (0..n).into_par_iter().map(|i| eigen2(tf.at(i), eps)).collect();
    EigenField {
        width: tf.width(),
        height: tf.height(),
        lam_plus: eig.iter().map(|e| e.lam_plus).collect(),
        lam_minus: eig.iter().map(|e| e.lam_minus).collect(),
        theta_minus: eig.iter().map(|e| e.theta_minus).collect(),
    }
}

/// Gain/threshold weight `c / (1 + sqrt(λ+ + λ−) / k)`.
///
/// A slightly negative eigenvalue sum left over from smoothing is clamped to 0.
pub fn diffusion_weight(lam_plus: f64, lam_minus: f64, c: f64, k: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::InvalidParameter(format!("threshold k must be > 0, got {k}")));
    }
    Ok(weight_unchecked(lam_plus, lam_minus, c, k))
}

#[inline]
pub(crate) fn weight_unchecked(lam_plus: f64, lam_minus: f64, c: f64, k: f64) -> f64 {
    let contrast = (lam_plus + lam_minus).max(0.0).sqrt();
    c / (1.0 + contrast / k)
}

/// Coherence-enhancing eigenvalue parameters: `c1` in `[0, 1]`, `c2 > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CedParams {
    c1: f64,
    c2: f64,
}

impl CedParams {
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&c1) {
            return Err(Error::InvalidParameter(format!("c1 must lie in [0, 1], got {c1}")));
        }
        if !(c2 > 0.0) || !c2.is_finite() {
            return Err(Error::InvalidParameter(format!("c2 must be > 0, got {c2}")));
        }
        Ok(Self { c1, c2 })
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }
}

impl Default for CedParams {
    fn default() -> Self {
        Self { c1: 0.001, c2: 1.0 }
    }
}

/// Diffusion-tensor eigenvalues `(λ1, λ2)` for coherence-enhancing diffusion.
pub fn ced_eigenvalues(lam_plus: f64, lam_minus: f64, p: CedParams) -> (f64, f64) {
    let gap = lam_plus - lam_minus;
    let lam2 = if gap.abs() <= 1e-12 {
        p.c1
    } else {
        p.c1 + (1.0 - p.c1) * (-p.c2 / (gap * gap)).exp()
    };
    (p.c1, lam2)
}

/// `λ1 θ+θ+ᵀ + λ2 θ−θ−ᵀ` with `θ+ = perp(θ−)`.
pub fn assemble_tensor(lam1: f64, lam2: f64, theta_minus: Direction) -> SymTensor {
    let [px, py] = perp(theta_minus);
    let [mx, my] = theta_minus;
    SymTensor {
        a11: lam1 * px * px + lam2 * mx * mx,
        a12: lam1 * px * py + lam2 * mx * my,
        a22: lam1 * py * py + lam2 * my * my,
    }
}

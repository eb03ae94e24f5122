//! Full-reference image quality metrics: MSE, PSNR and mean SSIM.

use std::io::{Read, Write};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::stencil::Channel;

/// Peak intensity of 8-bit samples.
pub const NMAX_8BIT: f64 = 255.0;

/// Which samples the pixel-error metrics run over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MetricDomain {
    /// Every sample of every channel.
    #[default]
    AllSamples,
    /// The luminance plane only.
    Luminance,
}

/// Numerator of the PSNR ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PeakConvention {
    /// `10 log10(nmax² / mse)`, the usual definition.
    #[default]
    Squared,
    /// `10 log10(nmax / mse)`.
    Unsquared,
}

/// Mean squared error over all samples.
pub fn mse(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    a.check_same_shape(b)?;
    Ok(mean_sq(a.data(), b.data()))
}

fn mean_sq(a: &[f64], b: &[f64]) -> f64 {
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    sum / a.len() as f64
}

fn psnr_from_mse(mse: f64, nmax: f64, peak: PeakConvention) -> f64 {
    if mse == 0.0 {
        return f64::INFINITY;
    }
    let num = match peak {
        PeakConvention::Squared => nmax * nmax,
        PeakConvention::Unsquared => nmax,
    };
    10.0 * (num / mse).log10()
}

/// Peak signal-to-noise ratio in dB; `+inf` for identical images.
pub fn psnr(a: &ImageBuffer, b: &ImageBuffer, nmax: f64) -> Result<f64> {
    Ok(psnr_from_mse(mse(a, b)?, nmax, PeakConvention::Squared))
}

/// Structural similarity settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SsimConfig {
    /// Side of the square Gaussian window.
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    /// Dynamic range `L` in `C1 = (k1 L)²`, `C2 = (k2 L)²`.
    pub dynamic_range: f64,
}

impl Default for SsimConfig {
    fn default() -> Self {
        Self {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 255.0,
        }
    }
}

impl SsimConfig {
    pub fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range).powi(2)
    }

    /// Normalized 2-D Gaussian window, row-major.
    fn weights(&self) -> Vec<f64> {
        let r = (self.window / 2) as f64;
        let denom = 2.0 * self.sigma * self.sigma;
        let mut w: Vec<f64> = (0..self.window * self.window)
            .map(|i| {
                let dx = (i % self.window) as f64 - r;
                let dy = (i / self.window) as f64 - r;
                (-(dx * dx + dy * dy) / denom).exp()
            })
            .collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= s);
        w
    }
}

/// Local statistics of one window position.
struct WindowStats {
    mu_a: f64,
    mu_b: f64,
    var_a: f64,
    var_b: f64,
    cov: f64,
}

fn window_stats(a: &Channel, b: &Channel, cfg: &SsimConfig, weights: &[f64]) -> Result<Vec<WindowStats>> {
    if !a.same_shape(b) {
        return Err(Error::mismatch(
            format!("{}x{}", a.width(), a.height()),
            format!("{}x{}", b.width(), b.height()),
        ));
    }
    let (w, h, n) = (a.width(), a.height(), cfg.window);
    if n == 0 || w < n || h < n {
        return Err(Error::InvalidParameter(format!(
            "image {w}x{h} is smaller than the {n}x{n} SSIM window"
        )));
    }
    let mut out = Vec::with_capacity((w - n + 1) * (h - n + 1));
    for y0 in 0..=h - n {
        for x0 in 0..=w - n {
            let taps = || {
                (0..n * n).map(move |k| {
                    let i = (y0 + k / n) * w + x0 + k % n;
                    (weights[k], a.data()[i], b.data()[i])
                })
            };
            let mu_a: f64 = taps().map(|(wt, va, _)| wt * va).sum();
            let mu_b: f64 = taps().map(|(wt, _, vb)| wt * vb).sum();
            let (mut var_a, mut var_b, mut cov) = (0.0, 0.0, 0.0);
            for (wt, va, vb) in taps() {
                let (da, db) = (va - mu_a, vb - mu_b);
                var_a += wt * da * da;
                var_b += wt * db * db;
                cov += wt * da * db;
            }
            out.push(WindowStats {
                mu_a,
                mu_b,
                var_a,
                var_b,
                cov,
            });
        }
    }
    Ok(out)
}

/// Mean of the SSIM map over all window positions fully inside the image.
/// Computed on luminance.
pub fn mssim_with(a: &ImageBuffer, b: &ImageBuffer, cfg: &SsimConfig) -> Result<f64> {
    a.check_same_shape(b)?;
    let (c1, c2) = (cfg.c1(), cfg.c2());
    let stats = window_stats(&a.luminance(), &b.luminance(), cfg, &cfg.weights())?;
    let total: f64 = stats
        .iter()
        .map(|s| {
            let lum = (2.0 * s.mu_a * s.mu_b + c1) / (s.mu_a * s.mu_a + s.mu_b * s.mu_b + c1);
            let cs = (2.0 * s.cov + c2) / (s.var_a + s.var_b + c2);
            lum * cs
        })
        .sum();
    Ok(total / stats.len() as f64)
}

pub fn mssim(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    mssim_with(a, b, &SsimConfig::default())
}

/// Mean of the contrast-structure factor of SSIM alone.
pub fn mean_contrast_structure(a: &ImageBuffer, b: &ImageBuffer, cfg: &SsimConfig) -> Result<f64> {
    a.check_same_shape(b)?;
    let c2 = cfg.c2();
    let stats = window_stats(&a.luminance(), &b.luminance(), cfg, &cfg.weights())?;
    let total: f64 = stats
        .iter()
        .map(|s| (2.0 * s.cov + c2) / (s.var_a + s.var_b + c2))
        .sum();
    Ok(total / stats.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityOptions {
    pub nmax: f64,
    pub peak: PeakConvention,
    pub domain: MetricDomain,
    pub ssim: SsimConfig,
}

impl QualityOptions {
    /// Peak 255, squared-peak PSNR over all samples, default SSIM window.
    pub fn standard() -> Self {
        Self {
            nmax: NMAX_8BIT,
            peak: PeakConvention::Squared,
            domain: MetricDomain::AllSamples,
            ssim: SsimConfig::default(),
        }
    }
}

impl Default for QualityOptions {
    fn default() -> Self {
        Self::standard()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub mse: f64,
    #[serde(serialize_with = "ser_db", deserialize_with = "de_db")]
    pub psnr: f64,
    pub mssim: f64,
}

/// MSE, PSNR and MSSIM of `restored` against `original` with standard options.
pub fn report(original: &ImageBuffer, restored: &ImageBuffer) -> Result<QualityReport> {
    report_with(original, restored, &QualityOptions::standard())
}

pub fn report_with(original: &ImageBuffer, restored: &ImageBuffer, opts: &QualityOptions) -> Result<QualityReport> {
    original.check_same_shape(restored)?;
    let mse = match opts.domain {
        MetricDomain::AllSamples => mean_sq(original.data(), restored.data()),
        MetricDomain::Luminance => mean_sq(original.luminance().data(), restored.luminance().data()),
    };
    Ok(QualityReport {
        mse,
        psnr: psnr_from_mse(mse, opts.nmax, opts.peak),
        mssim: mssim_with(original, restored, &opts.ssim)?,
    })
}

/// One row of a method comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: String,
    pub image: String,
    #[serde(serialize_with = "ser_db", deserialize_with = "de_db")]
    pub psnr_db: f64,
    pub mssim: f64,
    pub mse: f64,
    pub iterations: usize,
    pub seconds: f64,
}

impl BenchRow {
    pub fn new(method: &str, image: &str, q: &QualityReport, iterations: usize, seconds: f64) -> Self {
        Self {
            method: method.to_string(),
            image: image.to_string(),
            psnr_db: q.psnr,
            mssim: q.mssim,
            mse: q.mse,
            iterations,
            seconds,
        }
    }
}

/// Writes `+inf` as the string `"inf"`; JSON has no infinity literal.
fn ser_db<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(&format_db(*v))
    }
}

fn de_db<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Db {
        Num(f64),
        Text(String),
    }
    match Db::deserialize(d)? {
        Db::Num(v) => Ok(v),
        Db::Text(t) => t.parse().map_err(serde::de::Error::custom),
    }
}

/// Decimal rendering used in reports: shortest round-trip form, `inf` for infinity.
pub fn format_db(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else {
        format!("{v}")
    }
}

pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    for row in rows {
        wtr.serialize(row).map_err(|e| Error::Serialize(e.to_string()))?;
    }
    wtr.flush().map_err(|e| Error::Serialize(e.to_string()))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<BenchRow>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(|e| Error::Serialize(e.to_string())))
        .collect()
}

pub fn write_json<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, rows).map_err(|e| Error::Serialize(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{seq::SliceRandom, Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, n: usize, seed: u64) -> ImageBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ImageBuffer::from_fn(w, h, n, |_, _, _| rng.gen_range(0.0..255.0)).unwrap()
    }

    #[test]
    fn mse_cases() {
        let a = ImageBuffer::new(2, 1, 1, vec![0.0, 0.0]).unwrap();
        let b = ImageBuffer::new(2, 1, 1, vec![3.0, 4.0]).unwrap();
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        assert_eq!(mse(&a, &b).unwrap(), 12.5);

        let p = random_image(9, 7, 3, 1);
        let q = random_image(9, 7, 3, 2);
        let mut sum = 0.0;
        for y in 0..7 {
            for x in 0..9 {
                for c in 0..3 {
                    let d = p.get(x, y, c) - q.get(x, y, c);
                    sum += d * d;
                }
            }
        }
        let oracle = sum / (9.0 * 7.0 * 3.0);
        assert!((mse(&p, &q).unwrap() - oracle).abs() <= 1e-12 * oracle);
        assert!(mse(&p, &random_image(9, 7, 1, 3)).is_err());
    }

    #[test]
    fn psnr_cases() {
        let a = random_image(8, 8, 3, 4);
        assert_eq!(psnr(&a, &a, 255.0).unwrap(), f64::INFINITY);
        let shifted = ImageBuffer::new(8, 8, 3, a.data().iter().map(|v| v + 16.0).collect()).unwrap();
        let db = psnr(&a, &shifted, 255.0).unwrap();
        assert!((db - 10.0 * (65025.0f64 / 256.0).log10()).abs() < 1e-12);
        assert!((db - 24.0486).abs() < 1e-3);
        let literal = psnr_from_mse(256.0, 255.0, PeakConvention::Unsquared);
        assert!((literal - 10.0 * (255.0f64 / 256.0).log10()).abs() < 1e-12);
    }

    #[test]
    fn ssim_cases() {
        let a = random_image(24, 20, 3, 5);
        let b = random_image(24, 20, 3, 6);
        assert!((mssim(&a, &a).unwrap() - 1.0).abs() <= 1e-12);
        assert!((mssim(&a, &b).unwrap() - mssim(&b, &a).unwrap()).abs() <= 1e-12);

        let ca = ImageBuffer::filled(16, 16, 1, 100.0).unwrap();
        let cb = ImageBuffer::filled(16, 16, 1, 110.0).unwrap();
        let c1 = (0.01f64 * 255.0).powi(2);
        let closed = (2.0 * 100.0 * 110.0 + c1) / (100.0f64.powi(2) + 110.0f64.powi(2) + c1);
        assert!((closed - 22006.5025 / 22106.5025).abs() < 1e-15);
        assert!((mssim(&ca, &cb).unwrap() - closed).abs() < 1e-9);
        assert!((closed - 0.995477).abs() < 1e-6);

        let tiny = ImageBuffer::filled(10, 30, 1, 0.0).unwrap();
        assert!(mssim(&tiny, &tiny).is_err());
    }

    #[test]
    fn rgb_ssim_uses_luminance() {
        let a = random_image(16, 16, 3, 7);
        let b = random_image(16, 16, 3, 8);
        let la = ImageBuffer::from_channels(&[a.luminance()]).unwrap();
        let lb = ImageBuffer::from_channels(&[b.luminance()]).unwrap();
        assert_eq!(mssim(&a, &b).unwrap(), mssim(&la, &lb).unwrap());
    }

    #[test]
    fn report_composes_metrics() {
        let a = random_image(16, 16, 3, 9);
        let b = random_image(16, 16, 3, 10);
        let r = report(&a, &b).unwrap();
        assert_eq!(r.mse, mse(&a, &b).unwrap());
        assert_eq!(r.psnr, psnr(&a, &b, 255.0).unwrap());
        assert_eq!(r.mssim, mssim(&a, &b).unwrap());
        let same = report(&a, &a).unwrap();
        assert_eq!((same.mse, same.psnr), (0.0, f64::INFINITY));
        assert!((same.mssim - 1.0).abs() < 1e-12);

        let lum = report_with(
            &a,
            &b,
            &QualityOptions {
                domain: MetricDomain::Luminance,
                ..QualityOptions::standard()
            },
        )
        .unwrap();
        let expect = mean_sq(a.luminance().data(), b.luminance().data());
        assert_eq!(lum.mse, expect);
    }

    #[test]
    fn csv_rows_parse_back() {
        let a = random_image(16, 16, 1, 11);
        let b = random_image(16, 16, 1, 12);
        let rows = vec![
            BenchRow::new("harmonic", "edge", &report(&a, &b).unwrap(), 2500, 0.25),
            BenchRow::new("tensor", "edge", &report(&a, &a).unwrap(), 2500, 1.5),
        ];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("method,image,psnr_db,mssim,mse,iterations,seconds\n"));
        assert!(text.contains(",inf,"));
        assert_eq!(read_csv(buf.as_slice()).unwrap(), rows);

        let mut json = Vec::new();
        write_json(&rows, &mut json).unwrap();
        let back: Vec<BenchRow> = serde_json::from_slice(&json).unwrap();
        assert_eq!(back, rows);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn psnr_decreases_with_mse(a in 1e-6f64..1e4, b in 1e-6f64..1e4) {
            prop_assume!(a != b);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(psnr_from_mse(hi, 255.0, PeakConvention::Squared) < psnr_from_mse(lo, 255.0, PeakConvention::Squared));
        }

        #[test]
        fn mse_ignores_joint_permutation(seed in any::<u64>()) {
            let a = random_image(12, 12, 1, seed);
            let b = random_image(12, 12, 1, seed.wrapping_add(1));
            let mut idx: Vec<usize> = (0..144).collect();
            idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let pa = ImageBuffer::new(12, 12, 1, idx.iter().map(|&i| a.data()[i]).collect()).unwrap();
            let pb = ImageBuffer::new(12, 12, 1, idx.iter().map(|&i| b.data()[i]).collect()).unwrap();
            let (m0, m1) = (mse(&a, &b).unwrap(), mse(&pa, &pb).unwrap());
            prop_assert!((m0 - m1).abs() <= 1e-12 * m0);
        }

        #[test]
        fn ssim_symmetric_and_contrast_structure_shift_invariant(seed in any::<u64>(), shift in -50.0f64..50.0) {
            let a = random_image(16, 16, 1, seed);
            let b = ImageBuffer::new(16, 16, 1, a.data().iter().enumerate().map(|(i, v)| v * 0.7 + (i % 5) as f64 * 9.0).collect()).unwrap();
            prop_assert!((mssim(&a, &b).unwrap() - mssim(&b, &a).unwrap()).abs() <= 1e-12);
            let sa = ImageBuffer::new(16, 16, 1, a.data().iter().map(|v| v + shift).collect()).unwrap();
            let sb = ImageBuffer::new(16, 16, 1, b.data().iter().map(|v| v + shift).collect()).unwrap();
            let cfg = SsimConfig::default();
            let before = mean_contrast_structure(&a, &b, &cfg).unwrap();
            let after = mean_contrast_structure(&sa, &sb, &cfg).unwrap();
            prop_assert!((before - after).abs() <= 1e-9);
        }
    }
}

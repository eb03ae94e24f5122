//! Image and mask containers plus 8-bit file I/O.
//!
//! Samples are `f64` on the nominal `[0, 255]` scale. Conversion to and from
//! 8-bit happens only in [`load_image`] and [`save_image`]. PNG (8-bit gray or
//! RGB), binary PGM (`P5`) and binary PPM (`P6`) are supported; an alpha
//! channel is dropped with a warning.

use std::io::{ErrorKind, Write};
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ImageEncoder, ImageError, ImageFormat, ImageReader};

use crate::error::{Error, Result};
use crate::stencil::Channel;

/// Row-major, channel-interleaved raster of real intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidParameter(format!(
                "images have 1 or 3 channels, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::mismatch(
                format!("{} samples", width * height * channels),
                format!("{} samples", data.len()),
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("image contains non-finite samples".into()));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Image with every sample set to `value`.
    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    /// Builds an image by evaluating `f(x, y, channel)` at every sample.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Self::new(width, height, channels, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, value: f64) {
        self.data[(y * self.width + x) * self.channels + c] = value;
    }

    pub fn same_shape(&self, other: &ImageBuffer) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub fn check_same_shape(&self, other: &ImageBuffer) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::mismatch(self.shape_string(), other.shape_string()))
        }
    }

    pub fn check_mask(&self, mask: &Mask) -> Result<()> {
        if mask.width() == self.width && mask.height() == self.height {
            Ok(())
        } else {
            Err(Error::mismatch(
                format!("mask {}x{}", self.width, self.height),
                format!("mask {}x{}", mask.width(), mask.height()),
            ))
        }
    }

    fn shape_string(&self) -> String {
        format!("{}x{}x{}", self.width, self.height, self.channels)
    }

    /// Extracts channel `c` as a standalone plane.
    pub fn channel(&self, c: usize) -> Channel {
        assert!(c < self.channels, "channel index {c} out of range");
        let data = self.data.iter().skip(c).step_by(self.channels).copied().collect();
        Channel::from_vec(self.width, self.height, data)
    }

    pub fn split_channels(&self) -> Vec<Channel> {
        (0..self.channels).map(|c| self.channel(c)).collect()
    }

    /// Interleaves equally sized planes back into an image.
    pub fn from_channels(planes: &[Channel]) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| Error::InvalidParameter("no channels given".into()))?;
        let (w, h) = (first.width(), first.height());
        if let Some(bad) = planes.iter().find(|p| p.width() != w || p.height() != h) {
            return Err(Error::mismatch(
                format!("{w}x{h}"),
                format!("{}x{}", bad.width(), bad.height()),
            ));
        }
        let n = planes.len();
        let mut data = vec![0.0; w * h * n];
        for (c, plane) in planes.iter().enumerate() {
            for (i, &v) in plane.data().iter().enumerate() {
                data[i * n + c] = v;
            }
        }
        Self::new(w, h, n, data)
    }

    /// Single-channel luminance, `0.299 R + 0.587 G + 0.114 B` for RGB.
    pub fn luminance(&self) -> Channel {
        if self.channels == 1 {
            return self.channel(0);
        }
        let data = self
            .data
            .chunks_exact(3)
            .map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2])
            .collect();
        Channel::from_vec(self.width, self.height, data)
    }

    /// Smallest and largest sample.
    pub fn value_range(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub(crate) fn from_raw_unchecked(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height * channels);
        Self {
            width,
            height,
            channels,
            data,
        }
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// Binary per-pixel indicator of the region to inpaint (`true` = hole).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::mismatch(
                format!("{} mask bits", width * height),
                format!("{} mask bits", bits.len()),
            ));
        }
        Ok(Self { width, height, bits })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self { width, height, bits }
    }

    /// Axis-aligned rectangular hole `[x0, x0+w) x [y0, y0+h)`, clipped to the image.
    pub fn rect(width: usize, height: usize, x0: usize, y0: usize, w: usize, h: usize) -> Self {
        Self::from_fn(width, height, |x, y| x >= x0 && x < x0 + w && y >= y0 && y < y0 + h)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_full(&self) -> bool {
        self.bits.iter().all(|&b| b)
    }

    /// Copy of `img` with every hole sample replaced by `fill[c]`.
    pub fn damage(&self, img: &ImageBuffer, fill: &[f64]) -> Result<ImageBuffer> {
        img.check_mask(self)?;
        if fill.len() != img.channels() {
            return Err(Error::mismatch(
                format!("{} fill values", img.channels()),
                format!("{} fill values", fill.len()),
            ));
        }
        let mut out = img.clone();
        let n = img.channels();
        for (i, _) in self.bits.iter().enumerate().filter(|(_, &b)| b) {
            out.data[i * n..(i + 1) * n].copy_from_slice(fill);
        }
        Ok(out)
    }

    /// Mask rendered as a gray image, 255 inside the hole.
    pub fn to_image(&self) -> ImageBuffer {
        let data = self.bits.iter().map(|&b| if b { 255.0 } else { 0.0 }).collect();
        ImageBuffer::from_raw_unchecked(self.width, self.height, 1, data)
    }
}

fn map_image_error(path: &Path, err: ImageError) -> Error {
    match err {
        ImageError::IoError(e) if e.kind() == ErrorKind::NotFound => Error::NotFound(path.into()),
        ImageError::IoError(e) if e.kind() == ErrorKind::UnexpectedEof => Error::Corrupt {
            path: path.into(),
            reason: e.to_string(),
        },
        ImageError::IoError(e) => Error::Io {
            path: path.into(),
            source: e,
        },
        ImageError::Unsupported(e) => Error::UnsupportedFormat {
            path: path.into(),
            reason: e.to_string(),
        },
        other => Error::Corrupt {
            path: path.into(),
            reason: other.to_string(),
        },
    }
}

/// Reads an 8-bit PNG, PGM or PPM file; sample `v` becomes `v as f64`.
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let path = path.as_ref();
    let reader = ImageReader::open(path).map_err(|e| {
        if e.kind() == ErrorKind::NotFound {
            Error::NotFound(path.into())
        } else {
            Error::Io {
                path: path.into(),
                source: e,
            }
        }
    })?;
    let reader = reader.with_guessed_format().map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })?;
    match reader.format() {
        Some(ImageFormat::Png) | Some(ImageFormat::Pnm) => {}
        other => {
            return Err(Error::UnsupportedFormat {
                path: path.into(),
                reason: match other {
                    Some(f) => format!("{f:?} images are not supported"),
                    None => "unrecognized image format".into(),
                },
            })
        }
    }
    let decoded = reader.decode().map_err(|e| map_image_error(path, e))?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let (channels, bytes) = match decoded {
        DynamicImage::ImageLuma8(buf) => (1, buf.into_raw()),
        DynamicImage::ImageRgb8(buf) => (3, buf.into_raw()),
        DynamicImage::ImageLumaA8(buf) => {
            log::warn!("{}: alpha channel dropped", path.display());
            (1, buf.into_raw().chunks_exact(2).map(|p| p[0]).collect())
        }
        DynamicImage::ImageRgba8(buf) => {
            log::warn!("{}: alpha channel dropped", path.display());
            let raw = buf.into_raw();
            (3, raw.chunks_exact(4).flat_map(|p| [p[0], p[1], p[2]]).collect())
        }
        other => {
            return Err(Error::UnsupportedFormat {
                path: path.into(),
                reason: format!("only 8-bit samples are supported, got {:?}", other.color()),
            })
        }
    };
    let data = bytes.into_iter().map(f64::from).collect();
    ImageBuffer::new(w, h, channels, data)
}

/// Quantizes a sample to 8 bits: clamp to `[0, 255]`, round half away from zero.
#[inline]
pub fn quantize(v: f64) -> u8 {
    v.clamp(0.0, 255.0).round() as u8
}

/// Writes `img` as 8-bit PNG (`.png`) or binary PGM/PPM (`.pgm`, `.ppm`, `.pnm`).
pub fn save_image(img: &ImageBuffer, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    let format = match ext.as_str() {
        "png" => ImageFormat::Png,
        "pgm" | "ppm" | "pnm" => ImageFormat::Pnm,
        _ => {
            return Err(Error::UnsupportedFormat {
                path: path.into(),
                reason: format!("cannot infer output format from extension {ext:?}"),
            })
        }
    };
    if ext == "pgm" && img.channels() != 1 || ext == "ppm" && img.channels() != 3 {
        return Err(Error::UnsupportedFormat {
            path: path.into(),
            reason: format!("{}-channel image cannot be written as .{ext}", img.channels()),
        });
    }
    let bytes: Vec<u8> = img.data().iter().map(|&v| quantize(v)).collect();
    let color = if img.channels() == 1 {
        image::ExtendedColorType::L8
    } else {
        image::ExtendedColorType::Rgb8
    };
    let (w, h) = (img.width() as u32, img.height() as u32);
    let io_err = |source| Error::Io {
        path: path.into(),
        source,
    };
    let written = match format {
        ImageFormat::Pnm => {
            let file = std::fs::File::create(path).map_err(io_err)?;
            let subtype = if img.channels() == 1 {
                PnmSubtype::Graymap(SampleEncoding::Binary)
            } else {
                PnmSubtype::Pixmap(SampleEncoding::Binary)
            };
            let mut out = std::io::BufWriter::new(file);
            PnmEncoder::new(&mut out)
                .with_subtype(subtype)
                .write_image(&bytes, w, h, color)
                .and_then(|()| out.flush().map_err(ImageError::IoError))
        }
        _ => image::save_buffer_with_format(path, &bytes, w, h, color, format),
    };
    written.map_err(|e| match e {
        ImageError::IoError(source) => io_err(source),
        other => io_err(std::io::Error::other(other.to_string())),
    })
}

/// Sets the bits whose pixel lies within `tol` of `key` in every channel
/// (Chebyshev distance).
pub fn mask_from_color(img: &ImageBuffer, key: [f64; 3], tol: f64) -> Result<Mask> {
    if img.channels() != 3 {
        return Err(Error::InvalidParameter("color-key masks need a 3-channel image".into()));
    }
    if !(tol >= 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be >= 0, got {tol}")));
    }
    let bits = img
        .data()
        .chunks_exact(3)
        .map(|p| p.iter().zip(key).all(|(&v, k)| (v - k).abs() <= tol))
        .collect();
    Mask::new(img.width(), img.height(), bits)
}

/// Loads a mask image; any nonzero sample marks the pixel as hole.
pub fn mask_from_file(path: impl AsRef<Path>) -> Result<Mask> {
    let img = load_image(path)?;
    let n = img.channels();
    let bits = img
        .data()
        .chunks_exact(n)
        .map(|p| p.iter().any(|&v| v != 0.0))
        .collect();
    Mask::new(img.width(), img.height(), bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn write_pgm(path: &Path, w: usize, h: usize, bytes: &[u8]) {
        let mut buf = format!("P5\n{w} {h}\n255\n").into_bytes();
        buf.extend_from_slice(bytes);
        std::fs::write(path, buf).unwrap();
    }

    #[test]
    fn pgm_bytes_map_to_reals() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.pgm");
        write_pgm(&p, 2, 2, &[0, 128, 255, 64]);
        let img = load_image(&p).unwrap();
        assert_eq!(img.channels(), 1);
        assert_eq!(img.data(), &[0.0, 128.0, 255.0, 64.0]);
    }

    #[test]
    fn rgb_png_pixel() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.png");
        image::save_buffer(&p, &[10, 20, 30], 1, 1, image::ExtendedColorType::Rgb8).unwrap();
        let img = load_image(&p).unwrap();
        assert_eq!(img.channels(), 3);
        assert_eq!(img.data(), &[10.0, 20.0, 30.0]);
    }

    #[test]
    fn sixteen_bit_png_is_unsupported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("wide.png");
        let raw: Vec<u8> = [1000u16, 2000, 3000, 4000]
            .iter()
            .flat_map(|v| v.to_be_bytes())
            .collect();
        image::save_buffer(&p, &raw, 2, 2, image::ExtendedColorType::L16).unwrap();
        assert!(matches!(load_image(&p), Err(Error::UnsupportedFormat { .. })));
    }

    #[test]
    fn load_errors_are_distinct() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.png");
        assert!(matches!(load_image(&missing), Err(Error::NotFound(_))));

        let junk = dir.path().join("junk.bin");
        std::fs::write(&junk, b"definitely not an image").unwrap();
        assert!(matches!(load_image(&junk), Err(Error::UnsupportedFormat { .. })));

        let good = dir.path().join("good.png");
        image::save_buffer(&good, &[7u8; 64 * 64], 64, 64, image::ExtendedColorType::L8).unwrap();
        let mut bytes = std::fs::read(&good).unwrap();
        bytes.truncate(bytes.len() / 2);
        let truncated = dir.path().join("truncated.png");
        std::fs::write(&truncated, bytes).unwrap();
        assert!(matches!(load_image(&truncated), Err(Error::Corrupt { .. })));
    }

    #[test]
    fn alpha_is_stripped() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rgba.png");
        image::save_buffer(&p, &[1, 2, 3, 200], 1, 1, image::ExtendedColorType::Rgba8).unwrap();
        assert_eq!(load_image(&p).unwrap().data(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn save_clamps_and_rounds() {
        assert_eq!(quantize(255.7), 255);
        assert_eq!(quantize(127.5), 128);
        assert_eq!(quantize(-3.0), 0);
        assert_eq!(quantize(64.49), 64);

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.pgm");
        let img = ImageBuffer::new(2, 2, 1, vec![0.0, 128.0, 255.0, 64.0]).unwrap();
        save_image(&img, &p).unwrap();
        let raw = std::fs::read(&p).unwrap();
        assert_eq!(&raw[raw.len() - 4..], &[0, 128, 255, 64]);
        assert!(raw.starts_with(b"P5"));
    }

    #[test]
    fn ppm_is_binary_p6() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.ppm");
        let img = ImageBuffer::new(1, 1, 3, vec![1.0, 2.0, 3.0]).unwrap();
        save_image(&img, &p).unwrap();
        let raw = std::fs::read(&p).unwrap();
        assert!(raw.starts_with(b"P6"));
        assert_eq!(load_image(&p).unwrap(), img);
    }

    #[test]
    fn save_to_missing_directory_fails() {
        let img = ImageBuffer::filled(2, 2, 1, 0.0).unwrap();
        let err = save_image(&img, "/nonexistent-dir/x/y.png").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn color_key_exact_and_off_by_one() {
        let mut img = ImageBuffer::filled(3, 1, 3, 0.0).unwrap();
        img.set(1, 0, 0, 255.0);
        img.set(2, 0, 0, 254.0);
        let m = mask_from_color(&img, [255.0, 0.0, 0.0], 0.0).unwrap();
        assert_eq!(m.bits(), &[false, true, false]);
    }

    #[test]
    fn color_key_with_tolerance_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let img = ImageBuffer::from_fn(20, 20, 3, |_, _, c| {
            let base = [255.0, 0.0, 0.0][c];
            let jitter: f64 = rng.gen_range(0..=8) as f64;
            if c == 0 {
                base - jitter
            } else {
                base + jitter
            }
        })
        .unwrap();
        let mut expected = 0;
        for y in 0..20 {
            for x in 0..20 {
                let d = (img.get(x, y, 0) - 255.0)
                    .abs()
                    .max(img.get(x, y, 1).abs())
                    .max(img.get(x, y, 2).abs());
                if d <= 4.0 {
                    expected += 1;
                }
            }
        }
        let m = mask_from_color(&img, [255.0, 0.0, 0.0], 4.0).unwrap();
        assert_eq!(m.count(), expected);
        assert!(expected > 0 && expected < 400);
    }

    #[test]
    fn color_key_rejects_gray() {
        let img = ImageBuffer::filled(2, 2, 1, 0.0).unwrap();
        assert!(mask_from_color(&img, [0.0; 3], 0.0).is_err());
    }

    #[test]
    fn mask_files() {
        let dir = tempfile::tempdir().unwrap();
        let zeros = dir.path().join("z.png");
        image::save_buffer(&zeros, &[0u8; 16], 4, 4, image::ExtendedColorType::L8).unwrap();
        assert_eq!(mask_from_file(&zeros).unwrap().count(), 0);

        let full = dir.path().join("f.pgm");
        write_pgm(&full, 4, 4, &[255u8; 16]);
        assert!(mask_from_file(&full).unwrap().is_full());

        let checker = dir.path().join("c.png");
        let bytes: Vec<u8> = (0..16)
            .map(|i| if (i % 4 + i / 4) % 2 == 0 { 0 } else { 255 })
            .collect();
        image::save_buffer(&checker, &bytes, 4, 4, image::ExtendedColorType::L8).unwrap();
        let m = mask_from_file(&checker).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                assert_eq!(m.get(x, y), (x + y) % 2 == 1);
            }
        }
    }

    #[test]
    fn channel_split_and_merge() {
        let img = ImageBuffer::from_fn(3, 2, 3, |x, y, c| (x + 10 * y + 100 * c) as f64).unwrap();
        let planes = img.split_channels();
        assert_eq!(planes[2].get(1, 1), 211.0);
        assert_eq!(ImageBuffer::from_channels(&planes).unwrap(), img);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn integral_images_round_trip(
            w in 1usize..12, h in 1usize..12, rgb in any::<bool>(), seed in any::<u64>(), png in any::<bool>()
        ) {
            let channels = if rgb { 3 } else { 1 };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let img = ImageBuffer::from_fn(w, h, channels, |_, _, _| rng.gen_range(0..=255) as f64).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let ext = match (png, rgb) { (true, _) => "png", (false, true) => "ppm", (false, false) => "pgm" };
            let p = dir.path().join(format!("img.{ext}"));
            save_image(&img, &p).unwrap();
            prop_assert_eq!(load_image(&p).unwrap(), img);
        }

        #[test]
        fn zero_tolerance_key_matches_equality(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // Small palette so exact hits are common.
            let img = ImageBuffer::from_fn(16, 16, 3, |_, _, _| [0.0, 128.0, 255.0][rng.gen_range(0..3)]).unwrap();
            let key = [255.0, 0.0, 128.0];
            let m = mask_from_color(&img, key, 0.0).unwrap();
            for y in 0..16 {
                for x in 0..16 {
                    let eq = (0..3).all(|c| img.get(x, y, c) == key[c]);
                    prop_assert_eq!(m.get(x, y), eq);
                }
            }
        }
    }
}

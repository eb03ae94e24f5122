use super::InitMode;
use crate::error::{Error, Result};
use crate::image::{ImageBuffer, Mask};

/// Seeds the hole before iteration. Known pixels are never modified.
pub fn initialize_hole(img: &ImageBuffer, mask: &Mask, mode: InitMode) -> Result<ImageBuffer> {
    img.check_mask(mask)?;
    if mask.is_full() {
        return Err(Error::FullMask);
    }
    Ok(match mode {
        InitMode::KeepDamaged => img.clone(),
        InitMode::MeanFill => mean_fill(img, mask),
        InitMode::OnionPeel => onion_peel(img, mask),
    })
}

fn mean_fill(img: &ImageBuffer, mask: &Mask) -> ImageBuffer {
    let n = img.channels();
    // Offsets from the first known pixel, so a constant surround stays exact.
    let known = || {
        img.data()
            .chunks_exact(n)
            .zip(mask.bits())
            .filter(|(_, &hole)| !hole)
            .map(|(px, _)| px)
    };
    let origin = known().next().expect("mask is not full").to_vec();
    let mut sums = vec![0.0; n];
    let mut count = 0usize;
    for px in known() {
        count += 1;
        for c in 0..n {
            sums[c] += px[c] - origin[c];
        }
    }
    let means: Vec<f64> = (0..n).map(|c| origin[c] + sums[c] / count as f64).collect();
    let mut out = img.clone();
    for (px, &hole) in out.data_mut().chunks_exact_mut(n).zip(mask.bits()) {
        if hole {
            px.copy_from_slice(&means);
        }
    }
    out
}

/// Peels the hole inward one layer at a time. A layer is every unfilled pixel
/// with at least one known 4-neighbor; all pixels of a layer read the state
/// from before the layer was written.
fn onion_peel(img: &ImageBuffer, mask: &Mask) -> ImageBuffer {
    let (w, h, n) = (img.width(), img.height(), img.channels());
    let mut known: Vec<bool> = mask.bits().iter().map(|b| !b).collect();
    let mut out = img.clone();
    let mut remaining = mask.count();
    let mut layer: Vec<(usize, Vec<f64>)> = Vec::new();

    while remaining > 0 {
        layer.clear();
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                if known[i] {
                    continue;
                }
                let mut sources = neighbors4(x, y, w, h).filter(|&j| known[j]).peekable();
                let Some(&first) = sources.peek() else {
                    continue;
                };
                // Mean as first + average offset: equal neighbors give an exact copy.
                let base = &out.data()[first * n..(first + 1) * n];
                let mut acc = vec![0.0; n];
                let mut count = 0;
                for j in sources {
                    count += 1;
                    for c in 0..n {
                        acc[c] += out.data()[j * n + c] - base[c];
                    }
                }
                let values = (0..n).map(|c| base[c] + acc[c] / count as f64).collect();
                layer.push((i, values));
            }
        }
        debug_assert!(!layer.is_empty(), "grid is connected, so every layer is nonempty");
        for (i, values) in layer.drain(..) {
            out.data_mut()[i * n..(i + 1) * n].copy_from_slice(&values);
            known[i] = true;
            remaining -= 1;
        }
    }
    out
}

fn neighbors4(x: usize, y: usize, w: usize, h: usize) -> impl Iterator<Item = usize> {
    let left = (x > 0).then(|| y * w + x - 1);
    let right = (x + 1 < w).then(|| y * w + x + 1);
    let up = (y > 0).then(|| (y - 1) * w + x);
    let down = (y + 1 < h).then(|| (y + 1) * w + x);
    [left, right, up, down].into_iter().flatten()
}

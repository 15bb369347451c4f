//! Resampling kernels: box downsampling plus a family of interchangeable
//! upsamplers behind the [`Upsampler`] trait, selectable by name at runtime.

use crate::error::{Error, Result};
use crate::image::Image;

/// Scale factors accepted by [`box_downsample`].
pub const DOWNSAMPLE_SCALES: [usize; 3] = [2, 4, 8];

/// Replaces each s x s block with its per-channel arithmetic mean.
/// Both dimensions must be divisible by `s`.
pub fn box_downsample(img: &Image, s: usize) -> Result<Image> {
    if !DOWNSAMPLE_SCALES.contains(&s) {
        return Err(Error::InvalidParameter {
            name: "scale",
            reason: format!("must be one of {DOWNSAMPLE_SCALES:?}, got {s}"),
        });
    }
    let (h, w, c) = img.dims();
    if h % s != 0 {
        return Err(Error::NotDivisible {
            axis: "height",
            len: h,
            divisor: s,
        });
    }
    if w % s != 0 {
        return Err(Error::NotDivisible {
            axis: "width",
            len: w,
            divisor: s,
        });
    }
    let (oh, ow) = (h / s, w / s);
    let inv = 1.0 / (s * s) as f64;
    let mut out = vec![0.0; oh * ow * c];
    for or in 0..oh {
        for oc in 0..ow {
            for ch in 0..c {
                let mut acc = 0.0;
                for dr in 0..s {
                    for dc in 0..s {
                        acc += img.get(or * s + dr, oc * s + dc, ch);
                    }
                }
                out[(or * ow + oc) * c + ch] = acc * inv;
            }
        }
    }
    Image::new(oh, ow, c, out)
}

/// Block replication by `s`. Exact right inverse of [`box_downsample`].
pub fn nearest_upsample(img: &Image, s: usize) -> Result<Image> {
    check_upscale(s)?;
    let (h, w, c) = img.dims();
    let (oh, ow) = (h * s, w * s);
    let mut out = vec![0.0; oh * ow * c];
    for r in 0..oh {
        for col in 0..ow {
            for ch in 0..c {
                out[(r * ow + col) * c + ch] = img.get(r / s, col / s, ch);
            }
        }
    }
    Image::new(oh, ow, c, out)
}

/// Separable bilinear interpolation with half-pixel centers
/// (src = (dst + 0.5) / s - 0.5) and edge-clamped source indices.
pub fn bilinear_upsample(img: &Image, s: usize) -> Result<Image> {
    check_upscale(s)?;
    let (h, w, c) = img.dims();
    let row_taps = linear_taps(h, s);
    let col_taps = linear_taps(w, s);
    let (oh, ow) = (h * s, w * s);
    let mut out = vec![0.0; oh * ow * c];
    for (r, &(r0, r1, ft)) in row_taps.iter().enumerate() {
        for (col, &(c0, c1, fs)) in col_taps.iter().enumerate() {
            for ch in 0..c {
                let top = img.get(r0, c0, ch) * (1.0 - fs) + img.get(r0, c1, ch) * fs;
                let bot = img.get(r1, c0, ch) * (1.0 - fs) + img.get(r1, c1, ch) * fs;
                out[(r * ow + col) * c + ch] = top * (1.0 - ft) + bot * ft;
            }
        }
    }
    Image::new(oh, ow, c, out)
}

/// Separable cubic convolution with the Catmull-Rom kernel (a = -0.5),
/// half-pixel centers, edge clamp. Cubic kernels overshoot, so the
/// result is clamped back into [0, 1].
pub fn bicubic_upsample(img: &Image, s: usize) -> Result<Image> {
    check_upscale(s)?;
    let (h, w, c) = img.dims();
    let row_taps = cubic_taps(h, s);
    let col_taps = cubic_taps(w, s);
    let (oh, ow) = (h * s, w * s);
    let mut out = Vec::with_capacity(oh * ow * c);
    for (ri, rw) in &row_taps {
        for (ci, cw) in &col_taps {
            for ch in 0..c {
                let mut acc = 0.0;
                for (y, &wy) in ri.iter().zip(rw) {
                    let mut row_acc = 0.0;
                    for (x, &wx) in ci.iter().zip(cw) {
                        row_acc += img.get(*y, *x, ch) * wx;
                    }
                    acc += row_acc * wy;
                }
                out.push(acc);
            }
        }
    }
    Image::from_clamped(oh, ow, c, out)
}

fn check_upscale(s: usize) -> Result<()> {
    if s < 2 {
        return Err(Error::InvalidParameter {
            name: "scale",
            reason: format!("upsample factor must be >= 2, got {s}"),
        });
    }
    Ok(())
}

/// Per destination index: the two clamped source taps and the fractional
/// weight of the second. Shared with the network's internal upsampling so
/// both paths use one half-pixel convention.
pub(crate) fn linear_taps(src_len: usize, s: usize) -> Vec<(usize, usize, f64)> {
    let max = src_len as isize - 1;
    (0..src_len * s)
        .map(|dst| {
            let src = (dst as f64 + 0.5) / s as f64 - 0.5;
            let i0 = src.floor();
            let frac = src - i0;
            let a = (i0 as isize).clamp(0, max) as usize;
            let b = (i0 as isize + 1).clamp(0, max) as usize;
            (a, b, frac)
        })
        .collect()
}

/// Catmull-Rom kernel value at distance `x`.
fn catmull_rom(x: f64) -> f64 {
    const A: f64 = -0.5;
    let x = x.abs();
    if x <= 1.0 {
        (A + 2.0) * x * x * x - (A + 3.0) * x * x + 1.0
    } else if x < 2.0 {
        A * x * x * x - 5.0 * A * x * x + 8.0 * A * x - 4.0 * A
    } else {
        0.0
    }
}

fn cubic_taps(src_len: usize, s: usize) -> Vec<([usize; 4], [f64; 4])> {
    let max = src_len as isize - 1;
    (0..src_len * s)
        .map(|dst| {
            let src = (dst as f64 + 0.5) / s as f64 - 0.5;
            let base = src.floor() as isize;
            let mut idx = [0usize; 4];
            let mut wts = [0.0f64; 4];
            for (k, offset) in (-1isize..=2).enumerate() {
                let tap = base + offset;
                idx[k] = tap.clamp(0, max) as usize;
                wts[k] = catmull_rom(src - tap as f64);
            }
            (idx, wts)
        })
        .collect()
}

/// One upsampling strategy. All variants share the same contract:
/// (image, integer scale >= 2) -> image with dims scaled by `s`.
pub trait Upsampler: Send + Sync {
    /// Registry key, also the CLI spelling.
    fn name(&self) -> &'static str;
    fn upsample(&self, img: &Image, s: usize) -> Result<Image>;
}

pub struct Bilinear;
pub struct Bicubic;
pub struct Nearest;

impl Upsampler for Bilinear {
    fn name(&self) -> &'static str {
        "bilinear"
    }
    fn upsample(&self, img: &Image, s: usize) -> Result<Image> {
        bilinear_upsample(img, s)
    }
}

impl Upsampler for Bicubic {
    fn name(&self) -> &'static str {
        "bicubic"
    }
    fn upsample(&self, img: &Image, s: usize) -> Result<Image> {
        bicubic_upsample(img, s)
    }
}

impl Upsampler for Nearest {
    fn name(&self) -> &'static str {
        "nearest"
    }
    fn upsample(&self, img: &Image, s: usize) -> Result<Image> {
        nearest_upsample(img, s)
    }
}

static UPSAMPLERS: [&dyn Upsampler; 3] = [&Bilinear, &Bicubic, &Nearest];

/// Looks an upsampler up by its registered name.
pub fn upsampler(name: &str) -> Option<&'static dyn Upsampler> {
    UPSAMPLERS.iter().copied().find(|u| u.name() == name)
}

/// Names of every registered upsampler.
pub fn upsampler_names() -> Vec<&'static str> {
    UPSAMPLERS.iter().map(|u| u.name()).collect()
}

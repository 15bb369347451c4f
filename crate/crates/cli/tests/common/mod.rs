//! Shared fixtures for the CLI and acceptance tests: deterministic
//! synthetic tissue-like textures with enough sharp structure that
//! interpolation loses measurably and a trained correction can win it
//! back.

use std::path::Path;

use tilesr_core::image::Image;
use tilesr_core::io::save_image;

pub struct XorShift(u64);

impl XorShift {
    pub fn new(seed: u64) -> Self {
        // spread nearby seeds across the state space before the |1
        Self(seed.wrapping_mul(0x9E3779B97F4A7C15) | 1)
    }

    pub fn next_f64(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// A smooth tinted background with long-period banding and sharply
/// bounded elliptical blobs (dark core plus darker rim ring). Spatial
/// periods stay above the downsampling factor so most structure is
/// recoverable from the low-res input.
pub fn textured_image(h: usize, w: usize, seed: u64) -> Image {
    let mut rng = XorShift::new(seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1));
    let n_blobs = 10 + (rng.next_f64() * 8.0) as usize;
    let blobs: Vec<(f64, f64, f64, f64, f64)> = (0..n_blobs)
        .map(|_| {
            (
                rng.next_f64() * h as f64,
                rng.next_f64() * w as f64,
                4.0 + rng.next_f64() * 9.0,       // radius
                0.7 + rng.next_f64() * 0.6,       // aspect
                0.25 + rng.next_f64() * 0.25,     // core darkness
            )
        })
        .collect();
    // two band components with periods of roughly 14..45 pixels
    let (fy1, fx1) = (
        0.14 + rng.next_f64() * 0.3,
        0.14 + rng.next_f64() * 0.3,
    );
    let (fy2, fx2) = (
        0.14 + rng.next_f64() * 0.3,
        0.14 + rng.next_f64() * 0.3,
    );
    let (p1, p2) = (rng.next_f64() * 6.0, rng.next_f64() * 6.0);
    let tint = [0.88, 0.72, 0.80]; // eosin-ish
    let mut data = Vec::with_capacity(h * w * 3);
    for y in 0..h {
        for x in 0..w {
            let yf = y as f64;
            let xf = x as f64;
            let band = 0.07 * (yf * fy1 + xf * fx1 + p1).sin()
                + 0.05 * (yf * fy2 - xf * fx2 + p2).cos();
            let grad = 0.06 * (yf / h as f64 - 0.5) + 0.05 * (xf / w as f64 - 0.5);
            let mut cell = 0.0f64;
            for &(cy, cx, r, aspect, dark) in &blobs {
                let d = (((yf - cy) / r).powi(2) + ((xf - cx) / (r * aspect)).powi(2)).sqrt();
                if d < 1.0 {
                    // dark core, even darker rim ring, hard cutoffs
                    let level = if d > 0.72 { dark + 0.22 } else { dark };
                    cell = cell.max(level);
                }
            }
            for (c, &t) in tint.iter().enumerate() {
                let v = t + band + grad - cell - 0.02 * c as f64;
                data.push(v.clamp(0.02, 0.98));
            }
        }
    }
    Image::new(h, w, 3, data).unwrap()
}

/// Gentler variant for small-model overfitting: smooth banded background
/// with a few large sharp-rimmed blobs, nearly everything recoverable
/// after a x4 downsample.
#[allow(dead_code)]
pub fn overfit_patch(h: usize, w: usize, seed: u64) -> Image {
    let mut rng = XorShift::new(seed);
    let blobs: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.next_f64() * h as f64,
                rng.next_f64() * w as f64,
                8.0 + rng.next_f64() * 12.0,
                0.2 + rng.next_f64() * 0.2,
            )
        })
        .collect();
    let (f1, f2) = (
        0.05 + rng.next_f64() * 0.07,
        0.05 + rng.next_f64() * 0.07,
    );
    let (p1, p2) = (rng.next_f64() * 6.0, rng.next_f64() * 6.0);
    let mut data = Vec::with_capacity(h * w * 3);
    for y in 0..h {
        for x in 0..w {
            let base = 0.6 + 0.10 * ((y as f64 * f1 + p1).sin() * (x as f64 * f2 + p2).cos());
            let mut cell: f64 = 0.0;
            for &(cy, cx, r, dark) in &blobs {
                let d = (((y as f64 - cy) / r).powi(2) + ((x as f64 - cx) / r).powi(2)).sqrt();
                if d < 1.0 {
                    cell = cell.max(if d > 0.75 { dark + 0.15 } else { dark });
                }
            }
            for c in 0..3 {
                data.push((base - cell - 0.03 * c as f64).clamp(0.02, 0.98));
            }
        }
    }
    Image::new(h, w, 3, data).unwrap()
}

/// Writes `count` textured source PNGs into `dir`.
#[allow(dead_code)]
pub fn write_texture_sources(dir: &Path, count: usize, size: usize, seed0: u64) {
    std::fs::create_dir_all(dir).unwrap();
    for i in 0..count {
        let img = textured_image(size, size, seed0 + i as u64);
        save_image(&img, &dir.join(format!("slide{i:03}.png"))).unwrap();
    }
}

/// Batch of textured patches for in-memory dataset construction.
#[allow(dead_code)]
pub fn textured_patches(count: usize, size: usize, seed0: u64) -> Vec<Image> {
    (0..count)
        .map(|i| textured_image(size, size, seed0 + i as u64))
        .collect()
}

/// Path to the compiled `tilesr` binary.
#[allow(dead_code)]
pub fn tilesr_bin() -> &'static str {
    env!("CARGO_BIN_EXE_tilesr")
}

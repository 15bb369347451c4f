//! Distortion metrics: MSE, PSNR, and structural similarity in two
//! interchangeable variants (whole-image statistics, or the standard
//! 11x11 Gaussian-window mean), selectable by name.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

const K1: f64 = 0.01;
const K2: f64 = 0.03;

/// PSNR reported for a zero-error pair.
pub const PSNR_CAP_DB: f64 = 100.0;

/// Mean over all pixels and channels of the squared difference.
pub fn mse(x: &Image, y: &Image) -> Result<f64> {
    x.same_dims(y, "mse")?;
    let n = x.data().len() as f64;
    let sum: f64 = x
        .data()
        .iter()
        .zip(y.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / n)
}

/// 20 * log10(MAX_I / sqrt(MSE)) with MAX_I = 1; capped at 100 dB when
/// the error is exactly zero.
pub fn psnr(x: &Image, y: &Image) -> Result<f64> {
    let err = mse(x, y)?;
    Ok(psnr_from_mse(err))
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        PSNR_CAP_DB
    } else {
        -10.0 * mse.log10()
    }
}

/// Structural similarity from whole-image statistics, one evaluation per
/// channel, averaged over channels. Variances are population (1/N).
pub fn ssim_global(x: &Image, y: &Image, dynamic_range: f64) -> Result<f64> {
    x.same_dims(y, "ssim_global")?;
    check_range(dynamic_range)?;
    let (_, _, channels) = x.dims();
    let c1 = (K1 * dynamic_range).powi(2);
    let c2 = (K2 * dynamic_range).powi(2);
    let mut total = 0.0;
    for ch in 0..channels {
        let xs = x.channel_plane(ch);
        let ys = y.channel_plane(ch);
        let n = xs.len() as f64;
        let mu_x = xs.iter().sum::<f64>() / n;
        let mu_y = ys.iter().sum::<f64>() / n;
        let mut var_x = 0.0;
        let mut var_y = 0.0;
        let mut cov = 0.0;
        for (a, b) in xs.iter().zip(&ys) {
            var_x += (a - mu_x) * (a - mu_x);
            var_y += (b - mu_y) * (b - mu_y);
            cov += (a - mu_x) * (b - mu_y);
        }
        var_x /= n;
        var_y /= n;
        cov /= n;
        total += ssim_formula(mu_x, mu_y, var_x, var_y, cov, c1, c2);
    }
    Ok(total / channels as f64)
}

const WINDOW: usize = 11;
const WINDOW_SIGMA: f64 = 1.5;

/// Mean structural similarity under an 11x11 Gaussian window (sigma 1.5,
/// normalized weights), evaluated over every fully valid window position
/// and averaged over positions then channels. This is the default SSIM
/// the CLI reports.
pub fn ssim_windowed(x: &Image, y: &Image, dynamic_range: f64) -> Result<f64> {
    x.same_dims(y, "ssim_windowed")?;
    check_range(dynamic_range)?;
    let (h, w, channels) = x.dims();
    if h < WINDOW || w < WINDOW {
        return Err(Error::TooSmall {
            what: "image side for windowed ssim",
            actual: h.min(w),
            required: WINDOW,
        });
    }
    let c1 = (K1 * dynamic_range).powi(2);
    let c2 = (K2 * dynamic_range).powi(2);
    let kernel = gaussian_kernel();
    let mut total = 0.0;
    for ch in 0..channels {
        let xs = x.channel_plane(ch);
        let ys = y.channel_plane(ch);
        let xx: Vec<f64> = xs.iter().map(|v| v * v).collect();
        let yy: Vec<f64> = ys.iter().map(|v| v * v).collect();
        let xy: Vec<f64> = xs.iter().zip(&ys).map(|(a, b)| a * b).collect();
        let mu_x = separable_valid(&xs, h, w, &kernel);
        let mu_y = separable_valid(&ys, h, w, &kernel);
        let e_xx = separable_valid(&xx, h, w, &kernel);
        let e_yy = separable_valid(&yy, h, w, &kernel);
        let e_xy = separable_valid(&xy, h, w, &kernel);
        let mut acc = 0.0;
        for i in 0..mu_x.len() {
            let var_x = e_xx[i] - mu_x[i] * mu_x[i];
            let var_y = e_yy[i] - mu_y[i] * mu_y[i];
            let cov = e_xy[i] - mu_x[i] * mu_y[i];
            acc += ssim_formula(mu_x[i], mu_y[i], var_x, var_y, cov, c1, c2);
        }
        total += acc / mu_x.len() as f64;
    }
    Ok(total / channels as f64)
}

#[inline]
fn ssim_formula(mu_x: f64, mu_y: f64, var_x: f64, var_y: f64, cov: f64, c1: f64, c2: f64) -> f64 {
    ((2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2))
        / ((mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2))
}

fn check_range(dynamic_range: f64) -> Result<()> {
    if dynamic_range <= 0.0 || dynamic_range.is_nan() {
        return Err(Error::InvalidParameter {
            name: "dynamic_range",
            reason: format!("must be positive, got {dynamic_range}"),
        });
    }
    Ok(())
}

fn gaussian_kernel() -> [f64; WINDOW] {
    let mut k = [0.0; WINDOW];
    let center = (WINDOW / 2) as f64;
    let denom = 2.0 * WINDOW_SIGMA * WINDOW_SIGMA;
    let mut sum = 0.0;
    for (i, v) in k.iter_mut().enumerate() {
        *v = (-(i as f64 - center).powi(2) / denom).exp();
        sum += *v;
    }
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Valid-region weighted local mean: horizontal then vertical pass with
/// the normalized 1-D kernel. Output is (h-10) x (w-10).
fn separable_valid(plane: &[f64], h: usize, w: usize, kernel: &[f64; WINDOW]) -> Vec<f64> {
    let ow = w - WINDOW + 1;
    let mut horiz = vec![0.0; h * ow];
    for r in 0..h {
        let row = &plane[r * w..(r + 1) * w];
        for c in 0..ow {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                acc += row[c + k] * kv;
            }
            horiz[r * ow + c] = acc;
        }
    }
    let oh = h - WINDOW + 1;
    let mut out = vec![0.0; oh * ow];
    for r in 0..oh {
        for c in 0..ow {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                acc += horiz[(r + k) * ow + c] * kv;
            }
            out[r * ow + c] = acc;
        }
    }
    out
}

/// One SSIM strategy; `name` doubles as the CLI spelling.
pub trait StructuralSimilarity: Send + Sync {
    fn name(&self) -> &'static str;
    fn ssim(&self, x: &Image, y: &Image, dynamic_range: f64) -> Result<f64>;
}

pub struct GlobalSsim;
pub struct WindowedSsim;

impl StructuralSimilarity for GlobalSsim {
    fn name(&self) -> &'static str {
        "global"
    }
    fn ssim(&self, x: &Image, y: &Image, dynamic_range: f64) -> Result<f64> {
        ssim_global(x, y, dynamic_range)
    }
}

impl StructuralSimilarity for WindowedSsim {
    fn name(&self) -> &'static str {
        "windowed"
    }
    fn ssim(&self, x: &Image, y: &Image, dynamic_range: f64) -> Result<f64> {
        ssim_windowed(x, y, dynamic_range)
    }
}

static SSIM_VARIANTS: [&dyn StructuralSimilarity; 2] = [&WindowedSsim, &GlobalSsim];

/// Looks an SSIM variant up by its registered name.
pub fn ssim_variant(name: &str) -> Option<&'static dyn StructuralSimilarity> {
    SSIM_VARIANTS.iter().copied().find(|v| v.name() == name)
}

pub fn ssim_variant_names() -> Vec<&'static str> {
    SSIM_VARIANTS.iter().map(|v| v.name()).collect()
}

/// Per-item distortion summary. `psnr_db` is always derived from `mse`
/// through the same closed form, so the two stay consistent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub item_id: String,
    pub mse: f64,
    pub psnr_db: f64,
    pub ssim: f64,
}

impl MetricsRecord {
    /// Measures one pair with the given SSIM variant (dynamic range 1).
    pub fn measure(
        item_id: impl Into<String>,
        x: &Image,
        y: &Image,
        ssim: &dyn StructuralSimilarity,
    ) -> Result<Self> {
        let mse = mse(x, y)?;
        Ok(Self {
            item_id: item_id.into(),
            mse,
            psnr_db: psnr_from_mse(mse),
            ssim: ssim.ssim(x, y, 1.0)?,
        })
    }

    /// Checks the record invariants: psnr consistent with mse (1e-9) and
    /// ssim within [-1, 1].
    pub fn validate(&self) -> Result<()> {
        if self.mse > 0.0 && (self.psnr_db - psnr_from_mse(self.mse)).abs() > 1e-9 {
            return Err(Error::InvalidParameter {
                name: "psnr_db",
                reason: format!("inconsistent with mse {} for {}", self.mse, self.item_id),
            });
        }
        if !(-1.0..=1.0).contains(&self.ssim) {
            return Err(Error::InvalidParameter {
                name: "ssim",
                reason: format!("{} outside [-1, 1] for {}", self.ssim, self.item_id),
            });
        }
        Ok(())
    }
}

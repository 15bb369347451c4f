//! 2D discrete Fourier transforms, radial frequency weight maps, and the
//! weighted-frequency-error loss with exact gradients.
//!
//! The loss for one channel pair is
//!   sum over bins of  w[u,v] * (sqrt(|D[u,v]|^2 + EPS) - sqrt(EPS))
//! where D is the DFT of (generated - target). Summed over channels and
//! divided by H*W*C so the magnitude is resolution independent. The
//! sqrt(EPS) shift keeps the loss exactly zero for identical inputs while
//! leaving the gradient of the smoothed modulus untouched.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::image::Image;

/// Smoothing constant inside the modulus; keeps the loss differentiable
/// at zero spectral difference.
pub const WFE_EPS: f64 = 1e-12;

/// Unnormalized forward 2D DFT of one channel.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub height: usize,
    pub width: usize,
    /// Row-major bins, `values[u * width + v]`.
    pub values: Vec<Complex<f64>>,
}

/// Nonnegative per-bin frequency weights, symmetric under the
/// frequency-index reflection so conjugate bins weigh equally.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMap {
    pub height: usize,
    pub width: usize,
    /// Row-major, `weights[i * width + j]`.
    pub weights: Vec<f64>,
}

/// Forward DFT: S[u,v] = sum x[m,n] * exp(-2*pi*i*(u*m/H + v*n/W)).
pub fn dft2(channel: &[f64], height: usize, width: usize) -> Spectrum {
    assert_eq!(channel.len(), height * width, "plane length mismatch");
    let mut buf: Vec<Complex<f64>> = channel.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft2_in_place(&mut buf, height, width, false);
    Spectrum {
        height,
        width,
        values: buf,
    }
}

/// Inverse DFT carrying the 1/(H*W) factor; returns the real part.
pub fn idft2(spectrum: &Spectrum) -> Vec<f64> {
    let mut buf = spectrum.values.clone();
    fft2_in_place(&mut buf, spectrum.height, spectrum.width, true);
    let norm = 1.0 / (spectrum.height * spectrum.width) as f64;
    buf.into_iter().map(|z| z.re * norm).collect()
}

/// Row FFTs followed by column FFTs, both unnormalized.
fn fft2_in_place(buf: &mut [Complex<f64>], height: usize, width: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let row_fft = if inverse {
        planner.plan_fft_inverse(width)
    } else {
        planner.plan_fft_forward(width)
    };
    for row in buf.chunks_exact_mut(width) {
        row_fft.process(row);
    }
    let col_fft = if inverse {
        planner.plan_fft_inverse(height)
    } else {
        planner.plan_fft_forward(height)
    };
    let mut column = vec![Complex::default(); height];
    for v in 0..width {
        for u in 0..height {
            column[u] = buf[u * width + v];
        }
        col_fft.process(&mut column);
        for u in 0..height {
            buf[u * width + v] = column[u];
        }
    }
}

/// Linear radial ramp w = 1 + alpha * r / r_max over aliasing-aware
/// frequency distances: fi = min(i, H-i), fj = min(j, W-j). The DC bin is
/// always exactly 1; a 1x1 map is [[1]].
pub fn build_weight_map(height: usize, width: usize, alpha: f64) -> Result<WeightMap> {
    if alpha < 0.0 || alpha.is_nan() {
        return Err(Error::InvalidParameter {
            name: "alpha",
            reason: format!("must be nonnegative, got {alpha}"),
        });
    }
    if height == 0 || width == 0 {
        return Err(Error::InvalidParameter {
            name: "weight map dims",
            reason: format!("must be >= 1, got {height}x{width}"),
        });
    }
    let r_max_sq = ((height / 2) * (height / 2) + (width / 2) * (width / 2)) as f64;
    let mut weights = Vec::with_capacity(height * width);
    for i in 0..height {
        let fi = i.min(height - i);
        for j in 0..width {
            let fj = j.min(width - j);
            let w = if r_max_sq == 0.0 {
                1.0
            } else {
                1.0 + alpha * ((fi * fi + fj * fj) as f64 / r_max_sq).sqrt()
            };
            weights.push(w);
        }
    }
    Ok(WeightMap {
        height,
        width,
        weights,
    })
}

fn check_weight_dims(weights: &WeightMap, h: usize, w: usize) -> Result<()> {
    if weights.height != h || weights.width != w {
        return Err(Error::ShapeMismatch {
            context: "weight map vs image".to_string(),
            left: format!("{}x{}", weights.height, weights.width),
            right: format!("{h}x{w}"),
        });
    }
    Ok(())
}

/// Loss and gradient on CHW-contiguous raw planes (values unbounded).
/// The gradient has the same CHW layout as `gen`.
///
/// Gradient derivation: with D = F{gen - tgt} per channel,
///   dL/dgen[m,n] = (1/(HWC)) * Re( F{ G }[m,n] ),
///   G[u,v] = w[u,v] * conj(D[u,v]) / sqrt(|D[u,v]|^2 + EPS),
/// because the derivative of the smoothed modulus at bin (u,v) along a
/// pixel perturbation is Re(conj(D) * exp(-2*pi*i*(um/H + vn/W))) / |D|_s.
pub fn wfe_loss_grad_planes(
    gen: &[f64],
    tgt: &[f64],
    channels: usize,
    height: usize,
    width: usize,
    weights: &WeightMap,
    want_gradient: bool,
) -> Result<(f64, Option<Vec<f64>>)> {
    check_weight_dims(weights, height, width)?;
    let plane = height * width;
    assert_eq!(gen.len(), channels * plane, "gen plane length");
    assert_eq!(tgt.len(), channels * plane, "tgt plane length");
    let norm = 1.0 / (plane * channels) as f64;
    let mut loss = 0.0;
    let mut grad = if want_gradient {
        Some(vec![0.0; channels * plane])
    } else {
        None
    };
    let mut diff = vec![0.0; plane];
    for c in 0..channels {
        let g = &gen[c * plane..(c + 1) * plane];
        let t = &tgt[c * plane..(c + 1) * plane];
        for (d, (a, b)) in diff.iter_mut().zip(g.iter().zip(t)) {
            *d = a - b;
        }
        let spectrum = dft2(&diff, height, width);
        let mut ratio: Vec<Complex<f64>> = Vec::with_capacity(plane);
        for (z, &w) in spectrum.values.iter().zip(&weights.weights) {
            let smag = (z.norm_sqr() + WFE_EPS).sqrt();
            loss += w * (smag - WFE_EPS.sqrt());
            if want_gradient {
                ratio.push(z.conj() * (w / smag));
            }
        }
        if let Some(grad) = grad.as_mut() {
            fft2_in_place(&mut ratio, height, width, false);
            for (out, z) in grad[c * plane..(c + 1) * plane].iter_mut().zip(&ratio) {
                *out = z.re * norm;
            }
        }
    }
    Ok((loss * norm, grad))
}

/// Weighted frequency error between two images of equal shape.
pub fn wfe_loss(generated: &Image, target: &Image, weights: &WeightMap) -> Result<f64> {
    generated.same_dims(target, "wfe_loss")?;
    let (h, w, c) = generated.dims();
    let gen = planarize(generated);
    let tgt = planarize(target);
    let (loss, _) = wfe_loss_grad_planes(&gen, &tgt, c, h, w, weights, false)?;
    Ok(loss)
}

/// Exact gradient of [`wfe_loss`] with respect to every generated pixel,
/// returned in the image's own row-major (row, col, channel) layout.
pub fn wfe_gradient(generated: &Image, target: &Image, weights: &WeightMap) -> Result<Vec<f64>> {
    generated.same_dims(target, "wfe_gradient")?;
    let (h, w, c) = generated.dims();
    let gen = planarize(generated);
    let tgt = planarize(target);
    let (_, grad) = wfe_loss_grad_planes(&gen, &tgt, c, h, w, weights, true)?;
    let grad = grad.expect("gradient requested");
    // CHW -> HWC
    let plane = h * w;
    let mut out = vec![0.0; c * plane];
    for ch in 0..c {
        for p in 0..plane {
            out[p * c + ch] = grad[ch * plane + p];
        }
    }
    Ok(out)
}

fn planarize(img: &Image) -> Vec<f64> {
    let (h, w, c) = img.dims();
    let mut planes = Vec::with_capacity(h * w * c);
    for ch in 0..c {
        planes.extend(img.data().iter().skip(ch).step_by(c));
    }
    planes
}

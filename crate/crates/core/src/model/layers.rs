//! Differentiable building blocks on [`Tensor`]s: same-padding
//! convolutions, ReLU, 2x2 max pooling, fixed bilinear upsampling, and
//! channel concatenation. Every forward has a matching exact backward.

use rayon::prelude::*;

use super::tensor::Tensor;
use crate::resample::linear_taps;

/// Same-padding convolution with a k x k kernel (k = 1 or 3).
/// `weight` is [out_ch, in_ch, k, k] flattened, `bias` is [out_ch].
pub fn conv_forward(input: &Tensor, weight: &[f64], bias: &[f64], out_ch: usize, k: usize) -> Tensor {
    assert!(k == 1 || k == 3, "kernel size {k} unsupported");
    let (ic, h, w) = (input.channels, input.height, input.width);
    assert_eq!(weight.len(), out_ch * ic * k * k, "conv weight length");
    assert_eq!(bias.len(), out_ch, "conv bias length");
    let mut out = Tensor::zeros(out_ch, h, w);
    if k == 1 {
        let plane = h * w;
        out.data
            .par_chunks_mut(plane)
            .enumerate()
            .for_each(|(oc, out_plane)| {
                out_plane.fill(bias[oc]);
                for c in 0..ic {
                    let wv = weight[oc * ic + c];
                    for (o, v) in out_plane.iter_mut().zip(input.plane(c)) {
                        *o += wv * v;
                    }
                }
            });
        return out;
    }
    let padded = pad_planes(input);
    let pw = w + 2;
    let plane = h * w;
    out.data
        .par_chunks_mut(plane)
        .enumerate()
        .for_each(|(oc, out_plane)| {
            out_plane.fill(bias[oc]);
            for c in 0..ic {
                let k9 = &weight[(oc * ic + c) * 9..(oc * ic + c) * 9 + 9];
                let pad = &padded[c * (h + 2) * pw..(c + 1) * (h + 2) * pw];
                for y in 0..h {
                    let r0 = &pad[y * pw..y * pw + pw];
                    let r1 = &pad[(y + 1) * pw..(y + 1) * pw + pw];
                    let r2 = &pad[(y + 2) * pw..(y + 2) * pw + pw];
                    let out_row = &mut out_plane[y * w..(y + 1) * w];
                    stencil_row(out_row, r0, r1, r2, k9);
                }
            }
        });
    out
}

/// out_row[x] += sum of the 3x3 stencil at x; rows are padded to w + 2.
#[inline]
fn stencil_row(out_row: &mut [f64], r0: &[f64], r1: &[f64], r2: &[f64], k9: &[f64]) {
    let w = out_row.len();
    for x in 0..w {
        out_row[x] += k9[0] * r0[x]
            + k9[1] * r0[x + 1]
            + k9[2] * r0[x + 2]
            + k9[3] * r1[x]
            + k9[4] * r1[x + 1]
            + k9[5] * r1[x + 2]
            + k9[6] * r2[x]
            + k9[7] * r2[x + 1]
            + k9[8] * r2[x + 2];
    }
}

fn pad_planes(t: &Tensor) -> Vec<f64> {
    let (c, h, w) = (t.channels, t.height, t.width);
    let pw = w + 2;
    let mut padded = vec![0.0; c * (h + 2) * pw];
    for ch in 0..c {
        let src = t.plane(ch);
        let dst = &mut padded[ch * (h + 2) * pw..(ch + 1) * (h + 2) * pw];
        for y in 0..h {
            dst[(y + 1) * pw + 1..(y + 1) * pw + 1 + w].copy_from_slice(&src[y * w..(y + 1) * w]);
        }
    }
    padded
}

pub struct ConvGrads {
    pub input: Tensor,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

pub fn conv_backward(
    input: &Tensor,
    weight: &[f64],
    out_ch: usize,
    k: usize,
    grad_out: &Tensor,
) -> ConvGrads {
    assert!(k == 1 || k == 3, "kernel size {k} unsupported");
    let (ic, h, w) = (input.channels, input.height, input.width);
    assert_eq!(grad_out.channels, out_ch);
    assert_eq!((grad_out.height, grad_out.width), (h, w));
    let plane = h * w;
    let mut grad_bias = vec![0.0; out_ch];
    for (oc, slot) in grad_bias.iter_mut().enumerate() {
        *slot = grad_out.plane(oc).iter().sum();
    }
    if k == 1 {
        let mut grad_weight = vec![0.0; out_ch * ic];
        grad_weight
            .par_chunks_mut(ic)
            .enumerate()
            .for_each(|(oc, row)| {
                let g = grad_out.plane(oc);
                for (c, slot) in row.iter_mut().enumerate() {
                    *slot = g.iter().zip(input.plane(c)).map(|(a, b)| a * b).sum();
                }
            });
        let mut grad_input = Tensor::zeros(ic, h, w);
        grad_input
            .data
            .par_chunks_mut(plane)
            .enumerate()
            .for_each(|(c, gi)| {
                for oc in 0..out_ch {
                    let wv = weight[oc * ic + c];
                    for (o, g) in gi.iter_mut().zip(grad_out.plane(oc)) {
                        *o += wv * g;
                    }
                }
            });
        return ConvGrads {
            input: grad_input,
            weight: grad_weight,
            bias: grad_bias,
        };
    }

    let padded_in = pad_planes(input);
    let pw = w + 2;
    let mut grad_weight = vec![0.0; out_ch * ic * 9];
    grad_weight
        .par_chunks_mut(ic * 9)
        .enumerate()
        .for_each(|(oc, per_oc)| {
            let g = grad_out.plane(oc);
            for c in 0..ic {
                let pad = &padded_in[c * (h + 2) * pw..(c + 1) * (h + 2) * pw];
                let mut acc = [0.0f64; 9];
                for y in 0..h {
                    let g_row = &g[y * w..(y + 1) * w];
                    let r0 = &pad[y * pw..y * pw + pw];
                    let r1 = &pad[(y + 1) * pw..(y + 1) * pw + pw];
                    let r2 = &pad[(y + 2) * pw..(y + 2) * pw + pw];
                    for x in 0..w {
                        let gv = g_row[x];
                        acc[0] += gv * r0[x];
                        acc[1] += gv * r0[x + 1];
                        acc[2] += gv * r0[x + 2];
                        acc[3] += gv * r1[x];
                        acc[4] += gv * r1[x + 1];
                        acc[5] += gv * r1[x + 2];
                        acc[6] += gv * r2[x];
                        acc[7] += gv * r2[x + 1];
                        acc[8] += gv * r2[x + 2];
                    }
                }
                per_oc[c * 9..c * 9 + 9].copy_from_slice(&acc);
            }
        });

    // grad wrt input: same-padding correlation of grad_out with the
    // 180-degree rotated kernels, accumulated over output channels.
    let padded_grad = pad_planes(grad_out);
    let mut grad_input = Tensor::zeros(ic, h, w);
    grad_input
        .data
        .par_chunks_mut(plane)
        .enumerate()
        .for_each(|(c, gi)| {
            for oc in 0..out_ch {
                let k9 = &weight[(oc * ic + c) * 9..(oc * ic + c) * 9 + 9];
                let rot: [f64; 9] = [
                    k9[8], k9[7], k9[6], k9[5], k9[4], k9[3], k9[2], k9[1], k9[0],
                ];
                let pad = &padded_grad[oc * (h + 2) * pw..(oc + 1) * (h + 2) * pw];
                for y in 0..h {
                    let r0 = &pad[y * pw..y * pw + pw];
                    let r1 = &pad[(y + 1) * pw..(y + 1) * pw + pw];
                    let r2 = &pad[(y + 2) * pw..(y + 2) * pw + pw];
                    stencil_row(&mut gi[y * w..(y + 1) * w], r0, r1, r2, &rot);
                }
            }
        });
    ConvGrads {
        input: grad_input,
        weight: grad_weight,
        bias: grad_bias,
    }
}

pub fn relu_forward(t: &Tensor) -> Tensor {
    Tensor {
        channels: t.channels,
        height: t.height,
        width: t.width,
        data: t.data.iter().map(|&v| v.max(0.0)).collect(),
    }
}

/// `activated` is the ReLU output; the mask is activated > 0.
pub fn relu_backward(activated: &Tensor, grad_out: &Tensor) -> Tensor {
    Tensor {
        channels: grad_out.channels,
        height: grad_out.height,
        width: grad_out.width,
        data: activated
            .data
            .iter()
            .zip(&grad_out.data)
            .map(|(&a, &g)| if a > 0.0 { g } else { 0.0 })
            .collect(),
    }
}

/// 2x2 max pooling with stride 2; dims must be even. Returns the pooled
/// tensor and the flat input index of each maximum (first win on ties).
pub fn maxpool2_forward(t: &Tensor) -> (Tensor, Vec<u32>) {
    let (c, h, w) = (t.channels, t.height, t.width);
    assert!(h % 2 == 0 && w % 2 == 0, "pooling needs even dims, got {h}x{w}");
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Tensor::zeros(c, oh, ow);
    let mut idx = vec![0u32; c * oh * ow];
    for ch in 0..c {
        let src = t.plane(ch);
        let dst = out.plane_mut(ch);
        let ids = &mut idx[ch * oh * ow..(ch + 1) * oh * ow];
        for y in 0..oh {
            for x in 0..ow {
                let mut best = f64::NEG_INFINITY;
                let mut best_at = 0usize;
                for dy in 0..2 {
                    for dx in 0..2 {
                        let at = (2 * y + dy) * w + 2 * x + dx;
                        if src[at] > best {
                            best = src[at];
                            best_at = at;
                        }
                    }
                }
                dst[y * ow + x] = best;
                ids[y * ow + x] = best_at as u32;
            }
        }
    }
    (out, idx)
}

pub fn maxpool2_backward(
    indices: &[u32],
    in_dims: (usize, usize, usize),
    grad_out: &Tensor,
) -> Tensor {
    let (c, h, w) = in_dims;
    let mut grad_in = Tensor::zeros(c, h, w);
    let plane_out = grad_out.plane_len();
    for ch in 0..c {
        let gi = grad_in.plane_mut(ch);
        let go = grad_out.plane(ch);
        let ids = &indices[ch * plane_out..(ch + 1) * plane_out];
        for (g, &at) in go.iter().zip(ids) {
            gi[at as usize] += g;
        }
    }
    grad_in
}

/// Fixed (parameter-free) bilinear upsampling by integer factor `s`,
/// half-pixel centers with edge clamp, applied per plane.
pub fn upsample_forward(t: &Tensor, s: usize) -> Tensor {
    let (c, h, w) = (t.channels, t.height, t.width);
    let row_taps = linear_taps(h, s);
    let col_taps = linear_taps(w, s);
    let (oh, ow) = (h * s, w * s);
    let mut out = Tensor::zeros(c, oh, ow);
    let out_plane = oh * ow;
    out.data
        .par_chunks_mut(out_plane)
        .enumerate()
        .for_each(|(ch, dst)| {
            let src = t.plane(ch);
            for (r, &(r0, r1, ft)) in row_taps.iter().enumerate() {
                let top_row = &src[r0 * w..r0 * w + w];
                let bot_row = &src[r1 * w..r1 * w + w];
                let dst_row = &mut dst[r * ow..(r + 1) * ow];
                for (col, &(c0, c1, fs)) in col_taps.iter().enumerate() {
                    let top = top_row[c0] * (1.0 - fs) + top_row[c1] * fs;
                    let bot = bot_row[c0] * (1.0 - fs) + bot_row[c1] * fs;
                    dst_row[col] = top * (1.0 - ft) + bot * ft;
                }
            }
        });
    out
}

/// Transpose of [`upsample_forward`]: scatters each output gradient back
/// onto its source taps with the interpolation weights.
pub fn upsample_backward(grad_out: &Tensor, src_h: usize, src_w: usize, s: usize) -> Tensor {
    let c = grad_out.channels;
    assert_eq!(grad_out.height, src_h * s);
    assert_eq!(grad_out.width, src_w * s);
    let row_taps = linear_taps(src_h, s);
    let col_taps = linear_taps(src_w, s);
    let mut grad_in = Tensor::zeros(c, src_h, src_w);
    let in_plane = src_h * src_w;
    let ow = src_w * s;
    grad_in
        .data
        .par_chunks_mut(in_plane)
        .enumerate()
        .for_each(|(ch, gi)| {
            let go = grad_out.plane(ch);
            for (r, &(r0, r1, ft)) in row_taps.iter().enumerate() {
                let go_row = &go[r * ow..(r + 1) * ow];
                for (col, &(c0, c1, fs)) in col_taps.iter().enumerate() {
                    let g = go_row[col];
                    gi[r0 * src_w + c0] += g * (1.0 - ft) * (1.0 - fs);
                    gi[r0 * src_w + c1] += g * (1.0 - ft) * fs;
                    gi[r1 * src_w + c0] += g * ft * (1.0 - fs);
                    gi[r1 * src_w + c1] += g * ft * fs;
                }
            }
        });
    grad_in
}

pub fn concat_channels(a: &Tensor, b: &Tensor) -> Tensor {
    assert_eq!((a.height, a.width), (b.height, b.width));
    let mut data = Vec::with_capacity(a.data.len() + b.data.len());
    data.extend_from_slice(&a.data);
    data.extend_from_slice(&b.data);
    Tensor {
        channels: a.channels + b.channels,
        height: a.height,
        width: a.width,
        data,
    }
}

pub fn split_channels(grad: &Tensor, first: usize) -> (Tensor, Tensor) {
    let plane = grad.plane_len();
    let a = Tensor {
        channels: first,
        height: grad.height,
        width: grad.width,
        data: grad.data[..first * plane].to_vec(),
    };
    let b = Tensor {
        channels: grad.channels - first,
        height: grad.height,
        width: grad.width,
        data: grad.data[first * plane..].to_vec(),
    };
    (a, b)
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

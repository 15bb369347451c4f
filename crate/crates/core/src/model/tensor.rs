//! Planar (channel-major) feature container used inside the network.
//! Unlike [`crate::image::Image`], values are unbounded: training operates
//! on raw activations and only the export path clamps.

use crate::error::Result;
use crate::image::Image;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    /// CHW contiguous.
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    pub fn from_image(img: &Image) -> Self {
        let (h, w, c) = img.dims();
        let mut data = Vec::with_capacity(c * h * w);
        for ch in 0..c {
            data.extend(img.data().iter().skip(ch).step_by(c));
        }
        Self {
            channels: c,
            height: h,
            width: w,
            data,
        }
    }

    /// Interleaves back to an image, clamping into [0, 1].
    pub fn to_image_clamped(&self) -> Result<Image> {
        let plane = self.height * self.width;
        let mut out = Vec::with_capacity(self.data.len());
        for p in 0..plane {
            for c in 0..self.channels {
                out.push(self.data[c * plane + p]);
            }
        }
        Image::from_clamped(self.height, self.width, self.channels, out)
    }

    #[inline]
    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn plane_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.height * self.width;
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    pub fn add_assign(&mut self, other: &Tensor) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

//! The universal pixel container: normalized intensities on a dense grid.

use crate::error::{Error, Result};

/// An H x W x C grid of intensities in `[0, 1]`, stored row-major by
/// (row, column, channel). Immutable once constructed; construction
/// enforces finiteness and range.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    /// Builds an image after validating every invariant: dims >= 1,
    /// channels 1 or 3, data length H*W*C, all values finite in [0, 1].
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be >= 1, got {height}x{width}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidImage(format!(
                "channels must be 1 or 3, got {channels}"
            )));
        }
        let expected = height * width * channels;
        if data.len() != expected {
            return Err(Error::InvalidImage(format!(
                "data length {} does not match {height}x{width}x{channels} = {expected}",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0) {
            return Err(Error::InvalidImage(format!(
                "intensity {v} outside [0, 1]"
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    /// Constant-valued image.
    pub fn constant(height: usize, width: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(height, width, channels, vec![value; height * width * channels])
    }

    /// Builds from raw values, clamping into [0, 1] first. Non-finite
    /// values are still rejected.
    pub fn from_clamped(
        height: usize,
        width: usize,
        channels: usize,
        data: impl IntoIterator<Item = f64>,
    ) -> Result<Self> {
        let clamped: Vec<f64> = data.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        Self::new(height, width, channels, clamped)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.data[(row * self.width + col) * self.channels + channel]
    }

    /// (height, width, channels)
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    /// Copies one channel out as a dense H x W plane.
    pub fn channel_plane(&self, channel: usize) -> Vec<f64> {
        assert!(channel < self.channels, "channel {channel} out of range");
        let mut plane = Vec::with_capacity(self.height * self.width);
        for px in self.data.chunks_exact(self.channels) {
            plane.push(px[channel]);
        }
        plane
    }

    /// Mean intensity of one channel.
    pub fn channel_mean(&self, channel: usize) -> f64 {
        let n = (self.height * self.width) as f64;
        self.data
            .iter()
            .skip(channel)
            .step_by(self.channels)
            .sum::<f64>()
            / n
    }

    pub(crate) fn same_dims(&self, other: &Image, context: &str) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::ShapeMismatch {
                context: context.to_string(),
                left: format!("{}x{}x{}", self.height, self.width, self.channels),
                right: format!("{}x{}x{}", other.height, other.width, other.channels),
            });
        }
        Ok(())
    }
}

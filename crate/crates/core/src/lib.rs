//! Residual-interpolation super-resolution for tiled images.
//!
//! The pipeline: extract patches from large sources, pair each high-res
//! patch with its box-downsampled input, train a residual model (bilinear
//! baseline plus an attention U-Net correction) against a weighted
//! frequency-domain loss, and report SSIM/PSNR/MSE against interpolation
//! baselines. Interchangeable strategies (upsampling kernels, SSIM
//! variants) sit behind traits and resolve by name, so the CLI can select
//! them at runtime.

pub mod error;
pub mod image;
pub mod io;
pub mod metrics;
pub mod model;
pub mod patch;
pub mod resample;
pub mod spectral;
pub mod train;

pub use error::{Error, Result};
pub use image::Image;

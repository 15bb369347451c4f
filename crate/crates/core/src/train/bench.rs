//! Inference latency measurement: warmed-up single-patch forward timings.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::model::{forward_pass, parameter_count, Checkpoint};

const WARMUP_RUNS: usize = 3;

#[derive(Debug, Clone, Copy)]
pub struct BenchReport {
    pub mean_ms_per_patch: f64,
    pub std_ms: f64,
    pub param_count: usize,
}

impl BenchReport {
    /// `mean_ms,std_ms,param_count`
    pub fn to_csv_row(&self) -> String {
        format!("{},{},{}", self.mean_ms_per_patch, self.std_ms, self.param_count)
    }
}

/// Times `n_patches` single-patch forwards after three excluded warmup
/// runs. Input content is a fixed synthetic patch of the given low-res
/// dims; timing covers the pure forward pass, no decode or encode.
pub fn benchmark_inference(
    checkpoint: &Checkpoint,
    n_patches: usize,
    lr_dims: (usize, usize),
) -> Result<BenchReport> {
    if n_patches == 0 {
        return Err(Error::InvalidParameter {
            name: "n_patches",
            reason: "must be >= 1".into(),
        });
    }
    let (h, w) = lr_dims;
    let data: Vec<f64> = (0..h * w * 3)
        .map(|i| (i % 251) as f64 / 250.0)
        .collect();
    let lr = Image::new(h, w, 3, data)?;
    for _ in 0..WARMUP_RUNS {
        forward_pass(&checkpoint.config, &checkpoint.parameters, &lr)?;
    }
    let mut times_ms = Vec::with_capacity(n_patches);
    for _ in 0..n_patches {
        let start = Instant::now();
        let pass = forward_pass(&checkpoint.config, &checkpoint.parameters, &lr)?;
        let elapsed = start.elapsed().as_secs_f64() * 1e3;
        std::hint::black_box(&pass.output);
        times_ms.push(elapsed);
    }
    let mean = times_ms.iter().sum::<f64>() / n_patches as f64;
    let var = times_ms.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / n_patches as f64;
    Ok(BenchReport {
        mean_ms_per_patch: mean,
        std_ms: var.sqrt(),
        param_count: parameter_count(&checkpoint.config),
    })
}

//! Inference latency report for a checkpointed model.

use std::path::Path;

use anyhow::Result;
use tilesr_core::model::load_checkpoint;
use tilesr_core::train::benchmark_inference;

pub fn run(checkpoint_path: &Path, n: usize, lr_dims: Option<(usize, usize)>) -> Result<()> {
    let checkpoint = load_checkpoint(checkpoint_path)?;
    // default: the low-res side of a 256-pixel patch at this scale
    let dims = lr_dims.unwrap_or_else(|| {
        let side = 256 / checkpoint.config.scale;
        (side, side)
    });
    let report = benchmark_inference(&checkpoint, n, dims)?;
    println!(
        "{} patches of {}x{}: mean {:.3} ms/patch, std {:.3} ms, {} parameters",
        n, dims.0, dims.1, report.mean_ms_per_patch, report.std_ms, report.param_count
    );
    println!("{}", report.to_csv_row());
    Ok(())
}

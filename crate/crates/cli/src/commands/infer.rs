//! Single-image super-resolution.

use std::path::Path;

use anyhow::{Context, Result};
use tilesr_core::io::{load_image, save_image};
use tilesr_core::model::load_checkpoint;
use tilesr_core::train::infer;

pub fn run(checkpoint_path: &Path, input: &Path, output: &Path) -> Result<()> {
    let checkpoint = load_checkpoint(checkpoint_path)?;
    let lr = load_image(input).with_context(|| format!("loading {}", input.display()))?;
    let sr = infer(&checkpoint, &lr)?;
    if let Some(parent) = output.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    save_image(&sr, output)?;
    println!(
        "{}x{} -> {}x{} written to {}",
        lr.height(),
        lr.width(),
        sr.height(),
        sr.width(),
        output.display()
    );
    Ok(())
}

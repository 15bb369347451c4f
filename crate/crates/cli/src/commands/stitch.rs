//! Reassembles a directory of equally sized patches into one grid image.
//! Files are taken in lexicographic order, row-major.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use tilesr_core::io::{load_image, save_image};
use tilesr_core::patch::stitch_grid;

pub fn run(dir: &Path, rows: usize, cols: usize, output: &Path) -> Result<()> {
    let entries = std::fs::read_dir(dir)
        .with_context(|| format!("reading patch directory {}", dir.display()))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .map(|e| e.eq_ignore_ascii_case("png"))
                .unwrap_or(false)
        })
        .collect();
    files.sort();
    if files.len() != rows * cols {
        bail!(
            "{} holds {} png files, need exactly {} for a {rows}x{cols} grid",
            dir.display(),
            files.len(),
            rows * cols
        );
    }
    let patches = files
        .iter()
        .map(|p| load_image(p).with_context(|| format!("loading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let stitched = stitch_grid(&patches, rows, cols)?;
    save_image(&stitched, output)?;
    println!(
        "stitched {} patches into {}x{} {}",
        files.len(),
        stitched.height(),
        stitched.width(),
        output.display()
    );
    Ok(())
}

//! Reading a prepared dataset directory back into training pairs.
//!
//! Layout written by `prepare`:
//!   <dir>/manifest.jsonl          one JSON patch record per line
//!   <dir>/hr/<id>.png             high-res patches
//!   <dir>/lr/<id>.png             box-downsampled counterparts
//!
//! Pairs are rebuilt from the hr patches with an exact in-memory box
//! downsample, so the lr-consistency invariant holds bit-for-bit. The
//! stored lr files are 8-bit quantized; when present they are checked
//! against the derived lr within the quantization bound of 1/510.

use std::path::Path;

use anyhow::{bail, Context, Result};
use tilesr_core::io::load_image;
use tilesr_core::patch::{PatchEntry, PatchManifest};
use tilesr_core::train::{build_pairs_named, DatasetPair};

pub fn patch_id(entry: &PatchEntry) -> String {
    format!(
        "{}_{:05}_{:05}",
        entry.source_id, entry.origin_row, entry.origin_col
    )
}

pub fn load_dataset(dir: &Path, scale: usize) -> Result<Vec<DatasetPair>> {
    let manifest_path = dir.join("manifest.jsonl");
    let manifest = PatchManifest::load(&manifest_path)
        .with_context(|| format!("loading {}", manifest_path.display()))?;
    if manifest.entries.is_empty() {
        bail!("manifest {} lists no patches", manifest_path.display());
    }
    let mut pairs = Vec::with_capacity(manifest.entries.len());
    for entry in &manifest.entries {
        let id = patch_id(entry);
        let hr_path = dir.join("hr").join(format!("{id}.png"));
        let hr = load_image(&hr_path).with_context(|| format!("loading {}", hr_path.display()))?;
        let mut built = build_pairs_named(vec![(id.clone(), hr)], scale, entry.split)
            .with_context(|| format!("pairing patch {id}"))?;
        let pair = built.remove(0);
        pair.verify()?;

        let lr_path = dir.join("lr").join(format!("{id}.png"));
        if lr_path.exists() {
            let stored = load_image(&lr_path)
                .with_context(|| format!("loading {}", lr_path.display()))?;
            if stored.dims() != pair.lr.dims() {
                bail!(
                    "stored lr {} has dims {:?}, expected {:?}",
                    lr_path.display(),
                    stored.dims(),
                    pair.lr.dims()
                );
            }
            let max_err = stored
                .data()
                .iter()
                .zip(pair.lr.data())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            if max_err > 1.0 / 510.0 + 1e-9 {
                bail!(
                    "stored lr {} deviates from the box downsample of its hr patch by {max_err}",
                    lr_path.display()
                );
            }
        }
        pairs.push(pair);
    }
    Ok(pairs)
}

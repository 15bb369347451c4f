//! Dataset preparation: sources -> overlapping patches -> (hr, lr) pairs
//! on disk plus a line-delimited JSON manifest.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use tilesr_core::io::{load_image, save_image};
use tilesr_core::patch::{extract_patches, PatchManifest, Split};
use tilesr_core::resample::box_downsample;
use tilesr_core::train::assign_splits;
use tilesr_core::train::build_pairs_named;

use crate::dataset_io::patch_id;

const RASTER_EXTENSIONS: [&str; 6] = ["png", "jpg", "jpeg", "bmp", "tif", "tiff"];

pub struct PrepareArgs {
    pub src_dir: PathBuf,
    pub out_dir: PathBuf,
    pub size: usize,
    pub stride: usize,
    pub scale: usize,
    pub split_fraction: f64,
    pub seed: u64,
}

pub fn run(args: &PrepareArgs) -> Result<()> {
    if !args.size.is_multiple_of(args.scale) {
        bail!(
            "patch size {} is not divisible by scale {}",
            args.size,
            args.scale
        );
    }
    let sources = list_sources(&args.src_dir)?;
    if sources.is_empty() {
        bail!(
            "source directory {} contains no raster images",
            args.src_dir.display()
        );
    }

    let mut manifest = PatchManifest::default();
    let mut patches = Vec::new();
    let mut skipped = 0usize;
    for path in &sources {
        let img = load_image(path).with_context(|| format!("loading {}", path.display()))?;
        if img.height() < args.size || img.width() < args.size {
            skipped += 1;
            continue;
        }
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "source".to_string());
        let (source_manifest, source_patches) =
            extract_patches(&img, &stem, args.size, args.stride)?;
        manifest.entries.extend(source_manifest.entries);
        patches.extend(source_patches);
    }
    if patches.is_empty() {
        bail!(
            "no source in {} is at least {}x{} pixels ({} skipped)",
            args.src_dir.display(),
            args.size,
            args.size,
            skipped
        );
    }
    manifest.validate()?;

    // seeded train/test assignment over all patches
    let named: Vec<(String, _)> = manifest
        .entries
        .iter()
        .map(patch_id)
        .zip(patches)
        .collect();
    let mut pairs = build_pairs_named(named, args.scale, Split::Train)?;
    assign_splits(&mut pairs, args.split_fraction, args.seed)?;
    for (entry, pair) in manifest.entries.iter_mut().zip(&pairs) {
        entry.split = pair.split;
    }

    let hr_dir = args.out_dir.join("hr");
    let lr_dir = args.out_dir.join("lr");
    std::fs::create_dir_all(&hr_dir)
        .with_context(|| format!("creating {}", hr_dir.display()))?;
    std::fs::create_dir_all(&lr_dir)
        .with_context(|| format!("creating {}", lr_dir.display()))?;
    for pair in &pairs {
        save_image(&pair.hr, &hr_dir.join(format!("{}.png", pair.id)))?;
        let lr = box_downsample(&pair.hr, args.scale)?;
        save_image(&lr, &lr_dir.join(format!("{}.png", pair.id)))?;
    }
    manifest.save(&args.out_dir.join("manifest.jsonl"))?;

    let train_count = pairs.iter().filter(|p| p.split == Split::Train).count();
    let test_count = pairs.len() - train_count;
    println!(
        "{} sources, {} patches ({} train / {} test), {} undersized sources skipped",
        sources.len(),
        pairs.len(),
        train_count,
        test_count,
        skipped
    );
    Ok(())
}

fn list_sources(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir)
        .with_context(|| format!("reading source directory {}", dir.display()))?;
    let mut sources: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .map(|e| RASTER_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
                .unwrap_or(false)
        })
        .collect();
    sources.sort();
    Ok(sources)
}

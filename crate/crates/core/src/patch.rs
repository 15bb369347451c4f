//! Patch extraction from large sources, grid stitching, and the manifest
//! recording where every patch came from.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// Provenance of one extracted patch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchEntry {
    pub source_id: String,
    pub origin_row: usize,
    pub origin_col: usize,
    pub size: usize,
    pub split: Split,
}

/// Ordered list of patch provenance records. Origins are unique per
/// source and always lie fully inside the source bounds.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PatchManifest {
    pub entries: Vec<PatchEntry>,
}

impl PatchManifest {
    /// Validates uniqueness of (source_id, origin_row, origin_col).
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert((e.source_id.as_str(), e.origin_row, e.origin_col)) {
                return Err(Error::Dataset(format!(
                    "duplicate patch origin ({}, {}, {})",
                    e.source_id, e.origin_row, e.origin_col
                )));
            }
        }
        Ok(())
    }

    /// Writes one JSON record per line, UTF-8.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut file =
            std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
        for entry in &self.entries {
            let line = serde_json::to_string(entry)
                .map_err(|e| Error::Dataset(format!("manifest serialization: {e}")))?;
            writeln!(file, "{line}").map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut entries = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: PatchEntry = serde_json::from_str(&line).map_err(|e| {
                Error::Dataset(format!("manifest line {}: {e}", i + 1))
            })?;
            entries.push(entry);
        }
        let manifest = Self { entries };
        manifest.validate()?;
        Ok(manifest)
    }
}

/// Number of patch origins along one axis: floor((dim - size)/stride) + 1.
pub fn patch_count_1d(dim: usize, size: usize, stride: usize) -> usize {
    if dim < size {
        0
    } else {
        (dim - size) / stride + 1
    }
}

/// Extracts square patches at origins {0, stride, 2*stride, ...} per axis
/// while origin + size fits, iterating row-major. Split is assigned later;
/// entries start as Train.
pub fn extract_patches(
    source: &Image,
    source_id: &str,
    size: usize,
    stride: usize,
) -> Result<(PatchManifest, Vec<Image>)> {
    let (h, w, c) = source.dims();
    if h < size {
        return Err(Error::TooSmall {
            what: "source height",
            actual: h,
            required: size,
        });
    }
    if w < size {
        return Err(Error::TooSmall {
            what: "source width",
            actual: w,
            required: size,
        });
    }
    if stride == 0 {
        return Err(Error::InvalidParameter {
            name: "stride",
            reason: "must be >= 1".to_string(),
        });
    }
    let mut manifest = PatchManifest::default();
    let mut patches = Vec::new();
    let mut origin_row = 0;
    while origin_row + size <= h {
        let mut origin_col = 0;
        while origin_col + size <= w {
            let mut data = Vec::with_capacity(size * size * c);
            for r in 0..size {
                for col in 0..size {
                    for ch in 0..c {
                        data.push(source.get(origin_row + r, origin_col + col, ch));
                    }
                }
            }
            patches.push(Image::new(size, size, c, data)?);
            manifest.entries.push(PatchEntry {
                source_id: source_id.to_string(),
                origin_row,
                origin_col,
                size,
                split: Split::Train,
            });
            origin_col += stride;
        }
        origin_row += stride;
    }
    Ok((manifest, patches))
}

/// Places `rows * cols` equally sized patches (listed row-major) on a
/// grid. Pixel-exact, no blending.
pub fn stitch_grid(patches: &[Image], rows: usize, cols: usize) -> Result<Image> {
    if patches.len() != rows * cols {
        return Err(Error::ShapeMismatch {
            context: "stitch_grid patch count".to_string(),
            left: format!("{} patches", patches.len()),
            right: format!("{rows}x{cols} grid"),
        });
    }
    let (ph, pw, c) = patches[0].dims();
    for (i, p) in patches.iter().enumerate() {
        if p.dims() != (ph, pw, c) {
            return Err(Error::ShapeMismatch {
                context: format!("stitch_grid patch {i}"),
                left: format!("{}x{}x{}", p.height(), p.width(), p.channels()),
                right: format!("{ph}x{pw}x{c}"),
            });
        }
    }
    let (oh, ow) = (rows * ph, cols * pw);
    let mut out = vec![0.0; oh * ow * c];
    for (i, patch) in patches.iter().enumerate() {
        let (gr, gc) = (i / cols, i % cols);
        for r in 0..ph {
            let dst_row = gr * ph + r;
            for col in 0..pw {
                let dst_col = gc * pw + col;
                for ch in 0..c {
                    out[(dst_row * ow + dst_col) * c + ch] = patch.get(r, col, ch);
                }
            }
        }
    }
    Image::new(oh, ow, c, out)
}

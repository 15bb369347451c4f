//! Test-set evaluation: per-pair distortion metrics for the model and,
//! optionally, an interpolation baseline, plus mean aggregates.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use super::dataset::DatasetPair;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::metrics::{MetricsRecord, StructuralSimilarity};
use crate::model::{forward_pass, Checkpoint};
use crate::resample::Upsampler;

#[derive(Debug, Clone)]
pub struct EvalOutput {
    pub records: Vec<MetricsRecord>,
    /// Arithmetic mean of the per-pair values; in particular psnr_db is
    /// the mean of per-pair PSNRs, not the PSNR of the mean MSE.
    pub aggregate: MetricsRecord,
}

fn aggregate(records: &[MetricsRecord]) -> MetricsRecord {
    let n = records.len() as f64;
    MetricsRecord {
        item_id: "aggregate".to_string(),
        mse: records.iter().map(|r| r.mse).sum::<f64>() / n,
        psnr_db: records.iter().map(|r| r.psnr_db).sum::<f64>() / n,
        ssim: records.iter().map(|r| r.ssim).sum::<f64>() / n,
    }
}

fn check_pairs(pairs: &[DatasetPair], scale: usize) -> Result<()> {
    if pairs.is_empty() {
        return Err(Error::Dataset("evaluation split is empty".into()));
    }
    for pair in pairs {
        pair.verify()?;
        if pair.scale() != scale {
            return Err(Error::Config(format!(
                "pair {} has scale {}, expected {}",
                pair.id,
                pair.scale(),
                scale
            )));
        }
    }
    Ok(())
}

/// Runs the checkpointed model over the pairs and measures clamped
/// outputs against the high-res targets.
pub fn evaluate(
    checkpoint: &Checkpoint,
    pairs: &[DatasetPair],
    ssim: &dyn StructuralSimilarity,
) -> Result<EvalOutput> {
    check_pairs(pairs, checkpoint.config.scale)?;
    let records = pairs
        .par_iter()
        .map(|pair| {
            let out = forward_pass(&checkpoint.config, &checkpoint.parameters, &pair.lr)?
                .output
                .to_image_clamped()?;
            let rec = MetricsRecord::measure(pair.id.clone(), &out, &pair.hr, ssim)?;
            rec.validate()?;
            Ok(rec)
        })
        .collect::<Result<Vec<_>>>()?;
    let aggregate = aggregate(&records);
    Ok(EvalOutput { records, aggregate })
}

/// Same records for a plain interpolation baseline.
pub fn evaluate_baseline(
    upsampler: &dyn Upsampler,
    pairs: &[DatasetPair],
    ssim: &dyn StructuralSimilarity,
) -> Result<EvalOutput> {
    if pairs.is_empty() {
        return Err(Error::Dataset("evaluation split is empty".into()));
    }
    let records = pairs
        .par_iter()
        .map(|pair| {
            pair.verify()?;
            let out = upsampler.upsample(&pair.lr, pair.scale())?;
            let rec = MetricsRecord::measure(pair.id.clone(), &out, &pair.hr, ssim)?;
            rec.validate()?;
            Ok(rec)
        })
        .collect::<Result<Vec<_>>>()?;
    let aggregate = aggregate(&records);
    Ok(EvalOutput { records, aggregate })
}

/// Super-resolves one image with a checkpointed model, clamped for export.
pub fn infer(checkpoint: &Checkpoint, lr: &Image) -> Result<Image> {
    forward_pass(&checkpoint.config, &checkpoint.parameters, lr)?
        .output
        .to_image_clamped()
}

pub const METRICS_CSV_HEADER: &str = "item_id,mse,psnr_db,ssim";

pub fn write_records_csv(path: &Path, records: &[MetricsRecord]) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = String::from(METRICS_CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!("{},{},{},{}\n", r.item_id, r.mse, r.psnr_db, r.ssim));
    }
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

//! Side-by-side montages: [hr | baseline | model] per example, plus a
//! captions file with the (SSIM/PSNR) of every panel at full precision.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use tilesr_core::metrics::{MetricsRecord, WindowedSsim};
use tilesr_core::model::load_checkpoint;
use tilesr_core::patch::{stitch_grid, Split};
use tilesr_core::resample::upsampler;
use tilesr_core::io::save_image;
use tilesr_core::train::infer;

use crate::dataset_io::load_dataset;

pub struct ReportArgs {
    pub checkpoint: PathBuf,
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    pub n_examples: usize,
    pub baseline: String,
}

pub fn run(args: &ReportArgs) -> Result<()> {
    let checkpoint = load_checkpoint(&args.checkpoint)?;
    let up = upsampler(&args.baseline).ok_or_else(|| {
        anyhow::anyhow!("unknown baseline `{}` (use bicubic|bilinear)", args.baseline)
    })?;
    let pairs = load_dataset(&args.data_dir, checkpoint.config.scale)?;
    let mut examples: Vec<_> = pairs
        .iter()
        .filter(|p| p.split == Split::Test)
        .collect();
    if examples.is_empty() {
        examples = pairs.iter().collect();
    }
    examples.sort_by(|a, b| a.id.cmp(&b.id));
    if examples.is_empty() {
        bail!("dataset {} holds no pairs", args.data_dir.display());
    }
    let n = if args.n_examples > examples.len() {
        eprintln!(
            "warning: n_examples {} exceeds dataset size {}, clipping",
            args.n_examples,
            examples.len()
        );
        examples.len()
    } else {
        args.n_examples
    };

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let captions_path = args.out_dir.join("report_captions.txt");
    let mut captions = std::fs::File::create(&captions_path)
        .with_context(|| format!("creating {}", captions_path.display()))?;

    for pair in examples.into_iter().take(n) {
        let base = up.upsample(&pair.lr, pair.scale())?;
        let model_out = infer(&checkpoint, &pair.lr)?;
        let montage = stitch_grid(&[pair.hr.clone(), base.clone(), model_out.clone()], 1, 3)?;
        let montage_path = args.out_dir.join(format!("report_{}.png", pair.id));
        save_image(&montage, &montage_path)?;

        let base_rec = MetricsRecord::measure(&pair.id, &base, &pair.hr, &WindowedSsim)?;
        let model_rec = MetricsRecord::measure(&pair.id, &model_out, &pair.hr, &WindowedSsim)?;
        writeln!(captions, "{} hr reference", pair.id)?;
        writeln!(
            captions,
            "{} {} ({}/{})",
            pair.id, args.baseline, base_rec.ssim, base_rec.psnr_db
        )?;
        writeln!(
            captions,
            "{} model ({}/{})",
            pair.id, model_rec.ssim, model_rec.psnr_db
        )?;
        println!(
            "{}: {} - ({:.2}/{:.2}), model - ({:.2}/{:.2}) -> {}",
            pair.id,
            args.baseline,
            base_rec.ssim,
            base_rec.psnr_db,
            model_rec.ssim,
            model_rec.psnr_db,
            montage_path.display()
        );
    }
    println!("captions: {}", captions_path.display());
    Ok(())
}

//! Test-split evaluation with optional interpolation baseline, emitting
//! per-item and aggregate CSVs.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use tilesr_core::metrics::ssim_variant;
use tilesr_core::model::load_checkpoint;
use tilesr_core::patch::Split;
use tilesr_core::resample::upsampler;
use tilesr_core::train::{evaluate, evaluate_baseline, write_records_csv, EvalOutput};

use crate::dataset_io::load_dataset;

pub struct EvalArgs {
    pub checkpoint: PathBuf,
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    pub baseline: String,
    pub ssim: String,
}

pub fn run(args: &EvalArgs) -> Result<()> {
    let checkpoint = load_checkpoint(&args.checkpoint)?;
    let ssim = ssim_variant(&args.ssim)
        .ok_or_else(|| anyhow::anyhow!("unknown ssim variant `{}` (use global|windowed)", args.ssim))?;
    let pairs = load_dataset(&args.data_dir, checkpoint.config.scale)?;
    let test: Vec<_> = pairs
        .into_iter()
        .filter(|p| p.split == Split::Test)
        .collect();
    if test.is_empty() {
        bail!(
            "dataset {} has no test split; re-run prepare with split_fraction > 0",
            args.data_dir.display()
        );
    }

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;

    let model_eval = evaluate(&checkpoint, &test, ssim)?;
    write_eval(&args.out_dir, "model", &model_eval)?;
    print_eval("model", &model_eval);

    match args.baseline.as_str() {
        "none" => {}
        name => {
            let up = upsampler(name).ok_or_else(|| {
                anyhow::anyhow!("unknown baseline `{name}` (use bicubic|bilinear|none)")
            })?;
            let baseline_eval = evaluate_baseline(up, &test, ssim)?;
            write_eval(&args.out_dir, name, &baseline_eval)?;
            print_eval(name, &baseline_eval);
        }
    }
    Ok(())
}

fn write_eval(out_dir: &Path, tag: &str, eval: &EvalOutput) -> Result<()> {
    write_records_csv(&out_dir.join(format!("metrics_{tag}.csv")), &eval.records)?;
    write_records_csv(
        &out_dir.join(format!("metrics_{tag}_aggregate.csv")),
        std::slice::from_ref(&eval.aggregate),
    )?;
    Ok(())
}

fn print_eval(tag: &str, eval: &EvalOutput) {
    for r in &eval.records {
        println!("{}: {tag} - ({:.2}/{:.2})", r.item_id, r.ssim, r.psnr_db);
    }
    println!(
        "{tag} aggregate over {} items: mse {:.6e}, psnr {:.3} dB, ssim {:.4}",
        eval.records.len(),
        eval.aggregate.mse,
        eval.aggregate.psnr_db,
        eval.aggregate.ssim
    );
}

//! End-to-end checks of the `tilesr` binary: every subcommand, its file
//! outputs, and the documented error paths.

mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::{textured_image, tilesr_bin, write_texture_sources};
use tilesr_core::io::{load_image, save_image};
use tilesr_core::patch::extract_patches;

fn run(args: &[&str]) -> Output {
    Command::new(tilesr_bin())
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {:?} failed:\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn prepare_writes_the_expected_patch_grid() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("src");
    write_texture_sources(&src, 1, 512, 40);
    let out = dir.path().join("data");
    let stdout = run_ok(&[
        "prepare",
        "--src-dir",
        path_str(&src),
        "--out-dir",
        path_str(&out),
        "--scale",
        "4",
    ]);
    // 512x512, size 256, stride 128 -> 3 per axis
    assert!(stdout.contains("9 patches"), "stdout: {stdout}");
    let hr_count = std::fs::read_dir(out.join("hr")).unwrap().count();
    let lr_count = std::fs::read_dir(out.join("lr")).unwrap().count();
    assert_eq!((hr_count, lr_count), (9, 9));
    let manifest = std::fs::read_to_string(out.join("manifest.jsonl")).unwrap();
    assert_eq!(manifest.lines().count(), 9);
    // lr patches carry the downsampled dims
    let one_lr = load_image(&out.join("lr").join("slide000_00000_00000.png")).unwrap();
    assert_eq!(one_lr.dims(), (64, 64, 3));
}

#[test]
fn prepare_is_deterministic_and_honors_split_fraction() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("src");
    write_texture_sources(&src, 1, 320, 41);
    let args = |out: &Path| {
        vec![
            "prepare".to_string(),
            "--src-dir".into(),
            src.to_str().unwrap().into(),
            "--out-dir".into(),
            out.to_str().unwrap().into(),
            "--size".into(),
            "64".into(),
            "--stride".into(),
            "64".into(),
            "--scale".into(),
            "4".into(),
            "--split-fraction".into(),
            "0.25".into(),
            "--seed".into(),
            "5".into(),
        ]
    };
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let argv = args(out);
        let argv: Vec<&str> = argv.iter().map(|s| s.as_str()).collect();
        run_ok(&argv);
    }
    assert_eq!(
        std::fs::read(out_a.join("manifest.jsonl")).unwrap(),
        std::fs::read(out_b.join("manifest.jsonl")).unwrap()
    );

    let zero_split = dir.path().join("z");
    run_ok(&[
        "prepare",
        "--src-dir",
        path_str(&src),
        "--out-dir",
        path_str(&zero_split),
        "--size",
        "64",
        "--stride",
        "64",
        "--scale",
        "4",
        "--split-fraction",
        "0.0",
    ]);
    let manifest = std::fs::read_to_string(zero_split.join("manifest.jsonl")).unwrap();
    assert!(manifest.lines().all(|l| l.contains("\"train\"")));
}

#[test]
fn prepare_fails_on_empty_source_dir() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("empty");
    std::fs::create_dir_all(&src).unwrap();
    let out = run(&[
        "prepare",
        "--src-dir",
        path_str(&src),
        "--out-dir",
        path_str(&dir.path().join("data")),
        "--scale",
        "4",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no raster images"));
}

/// Builds a small prepared dataset plus a config file; returns (data dir,
/// config path, run dir).
fn small_dataset(dir: &Path, epochs: usize) -> (std::path::PathBuf, std::path::PathBuf) {
    let src = dir.join("src");
    write_texture_sources(&src, 2, 96, 42);
    let data = dir.join("data");
    run_ok(&[
        "prepare",
        "--src-dir",
        path_str(&src),
        "--out-dir",
        path_str(&data),
        "--size",
        "32",
        "--stride",
        "32",
        "--scale",
        "4",
        "--split-fraction",
        "0.25",
        "--seed",
        "3",
    ]);
    let run_dir = dir.join("run");
    let config = dir.join("run.cfg");
    std::fs::write(
        &config,
        format!(
            "data_dir = {}\nout_dir = {}\nscale = 4\ndepth = 1\nbase_channels = 4\n\
             epochs = {epochs}\nlearning_rate = 1e-3\nval_interval = 4\nseed = 9\n",
            data.display(),
            run_dir.display()
        ),
    )
    .unwrap();
    (data, config)
}

#[test]
fn train_with_zero_epochs_writes_initialization_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let (_, config) = small_dataset(dir.path(), 0);
    run_ok(&["train", "--config", path_str(&config)]);
    let run_dir = dir.path().join("run");
    assert!(run_dir.join("checkpoint.ckpt").exists());
    let log = std::fs::read_to_string(run_dir.join("training_log.csv")).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    assert_eq!(lines.len(), 2, "header plus the initial row only: {log}");
    assert!(lines[0].starts_with("step,epoch,train_wfe_loss,val_ssim,val_psnr"));
    assert!(lines[1].starts_with("0,0,"));
}

#[test]
fn train_reports_missing_data_dir_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.cfg");
    std::fs::write(
        &config,
        format!(
            "data_dir = {}/nope\nout_dir = {}/run\n",
            dir.path().display(),
            dir.path().display()
        ),
    )
    .unwrap();
    let out = run(&["train", "--config", path_str(&config)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("data_dir"));
}

#[test]
fn eval_zero_init_model_matches_bilinear_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let (data, config) = small_dataset(dir.path(), 0);
    run_ok(&["train", "--config", path_str(&config)]);
    let ckpt = dir.path().join("run/checkpoint.ckpt");
    let metrics = dir.path().join("metrics");
    run_ok(&[
        "eval",
        "--checkpoint",
        path_str(&ckpt),
        "--data-dir",
        path_str(&data),
        "--out-dir",
        path_str(&metrics),
        "--baseline",
        "bilinear",
    ]);
    let agg = |tag: &str| -> Vec<f64> {
        let text =
            std::fs::read_to_string(metrics.join(format!("metrics_{tag}_aggregate.csv"))).unwrap();
        let row = text.lines().nth(1).unwrap();
        row.split(',').skip(1).map(|v| v.parse().unwrap()).collect()
    };
    let model = agg("model");
    let baseline = agg("bilinear");
    for (m, b) in model.iter().zip(&baseline) {
        assert!((m - b).abs() < 1e-6, "model {model:?} vs bilinear {baseline:?}");
    }
    let per_item = std::fs::read_to_string(metrics.join("metrics_model.csv")).unwrap();
    assert!(per_item.starts_with("item_id,mse,psnr_db,ssim"));
}

#[test]
fn infer_scales_dims_and_rejects_bad_multiples() {
    let dir = tempfile::tempdir().unwrap();
    let (_, config) = small_dataset(dir.path(), 0);
    run_ok(&["train", "--config", path_str(&config)]);
    let ckpt = dir.path().join("run/checkpoint.ckpt");

    let input = dir.path().join("in.png");
    save_image(&textured_image(16, 16, 50), &input).unwrap();
    let output = dir.path().join("out.png");
    run_ok(&[
        "infer",
        "--checkpoint",
        path_str(&ckpt),
        "--input",
        path_str(&input),
        "--output",
        path_str(&output),
    ]);
    assert_eq!(load_image(&output).unwrap().dims(), (64, 64, 3));

    let odd = dir.path().join("odd.png");
    save_image(&textured_image(33, 33, 51), &odd).unwrap();
    let out = run(&[
        "infer",
        "--checkpoint",
        path_str(&ckpt),
        "--input",
        path_str(&odd),
        "--output",
        path_str(&dir.path().join("never.png")),
    ]);
    // depth 1 at scale 4 accepts anything; use the deeper default model
    // error path via a fresh config below only if this one passed
    if out.status.success() {
        // build a depth-4 checkpoint: 33 is not a multiple of 4
        let run2 = dir.path().join("run2");
        let cfg2 = dir.path().join("run2.cfg");
        std::fs::write(
            &cfg2,
            format!(
                "data_dir = {}\nout_dir = {}\nscale = 4\ndepth = 4\nbase_channels = 2\nepochs = 0\n",
                dir.path().join("data").display(),
                run2.display()
            ),
        )
        .unwrap();
        // 32x32 patches divide by 2^4 after x4 upsampling (128/16), so
        // training the deeper config on them is legal
        run_ok(&["train", "--config", path_str(&cfg2)]);
        let out2 = run(&[
            "infer",
            "--checkpoint",
            path_str(&run2.join("checkpoint.ckpt")),
            "--input",
            path_str(&odd),
            "--output",
            path_str(&dir.path().join("never.png")),
        ]);
        assert!(!out2.status.success());
        let err = String::from_utf8_lossy(&out2.stderr).into_owned();
        assert!(err.contains("not divisible by 4"), "stderr: {err}");
    }
}

#[test]
fn stitch_reassembles_a_grid_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    // quantize through one save/load so every later byte matches exactly
    let tmp = dir.path().join("orig.png");
    save_image(&textured_image(256, 256, 60), &tmp).unwrap();
    let original = load_image(&tmp).unwrap();

    let (_, patches) = extract_patches(&original, "tile", 64, 64).unwrap();
    assert_eq!(patches.len(), 16);
    let patch_dir = dir.path().join("patches");
    std::fs::create_dir_all(&patch_dir).unwrap();
    for (i, p) in patches.iter().enumerate() {
        save_image(p, &patch_dir.join(format!("tile_{i:02}.png"))).unwrap();
    }
    let stitched_path = dir.path().join("stitched.png");
    run_ok(&[
        "stitch",
        "--dir",
        path_str(&patch_dir),
        "--rows",
        "4",
        "--cols",
        "4",
        "--output",
        path_str(&stitched_path),
    ]);
    let stitched = load_image(&stitched_path).unwrap();
    assert_eq!(stitched, original);

    // wrong count
    std::fs::remove_file(patch_dir.join("tile_15.png")).unwrap();
    let out = run(&[
        "stitch",
        "--dir",
        path_str(&patch_dir),
        "--output",
        path_str(&dir.path().join("x.png")),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("15"));
}

#[test]
fn report_captions_match_eval_and_panels_are_exact_crops() {
    let dir = tempfile::tempdir().unwrap();
    let (data, config) = small_dataset(dir.path(), 1);
    run_ok(&["train", "--config", path_str(&config)]);
    let ckpt = dir.path().join("run/checkpoint.ckpt");

    let metrics = dir.path().join("metrics");
    run_ok(&[
        "eval",
        "--checkpoint",
        path_str(&ckpt),
        "--data-dir",
        path_str(&data),
        "--out-dir",
        path_str(&metrics),
        "--baseline",
        "bicubic",
    ]);
    let reports = dir.path().join("reports");
    run_ok(&[
        "report",
        "--checkpoint",
        path_str(&ckpt),
        "--data-dir",
        path_str(&data),
        "--out-dir",
        path_str(&reports),
        "--n-examples",
        "1",
    ]);

    let captions = std::fs::read_to_string(reports.join("report_captions.txt")).unwrap();
    let model_line = captions
        .lines()
        .find(|l| l.contains(" model ("))
        .expect("model caption line");
    let item_id = model_line.split_whitespace().next().unwrap().to_string();
    let inside = model_line.split('(').nth(1).unwrap().trim_end_matches(')');
    let (caption_ssim, caption_psnr) = {
        let mut it = inside.split('/');
        (
            it.next().unwrap().parse::<f64>().unwrap(),
            it.next().unwrap().parse::<f64>().unwrap(),
        )
    };
    let eval_csv = std::fs::read_to_string(metrics.join("metrics_model.csv")).unwrap();
    let row = eval_csv
        .lines()
        .find(|l| l.starts_with(&item_id))
        .expect("eval row for reported item");
    let fields: Vec<&str> = row.split(',').collect();
    let eval_psnr: f64 = fields[2].parse().unwrap();
    let eval_ssim: f64 = fields[3].parse().unwrap();
    assert!((caption_ssim - eval_ssim).abs() < 1e-9);
    assert!((caption_psnr - eval_psnr).abs() < 1e-9);

    // montage layout: width is 3 x patch width; model panel equals infer output
    let montage = load_image(&reports.join(format!("report_{item_id}.png"))).unwrap();
    assert_eq!(montage.dims(), (32, 96, 3));
    let lr_path = data.join("lr").join(format!("{item_id}.png"));
    assert!(lr_path.exists());
    let sr_path = dir.path().join("sr.png");
    run_ok(&[
        "infer",
        "--checkpoint",
        path_str(&ckpt),
        "--input",
        path_str(&data.join("hr").join(format!("{item_id}.png"))),
        "--output",
        path_str(&dir.path().join("unused.png")),
    ]);
    // crop the third panel and compare against a direct inference on the
    // exact lr pair used by report (derived from hr in memory, so redo
    // it through the library for byte equality)
    let hr = load_image(&data.join("hr").join(format!("{item_id}.png"))).unwrap();
    let lr = tilesr_core::resample::box_downsample(&hr, 4).unwrap();
    let lr_tmp = dir.path().join("lr_exact.png");
    // quantized lr differs from the exact lr; reproduce the model output
    // through the library instead
    let checkpoint = tilesr_core::model::load_checkpoint(&ckpt).unwrap();
    let model_img = tilesr_core::train::infer(&checkpoint, &lr).unwrap();
    save_image(&model_img, &sr_path).unwrap();
    let model_quantized = load_image(&sr_path).unwrap();
    for r in 0..32 {
        for c in 0..32 {
            for ch in 0..3 {
                assert_eq!(
                    montage.get(r, 64 + c, ch),
                    model_quantized.get(r, c, ch),
                    "panel mismatch at ({r},{c},{ch})"
                );
            }
        }
    }
    let _ = lr_tmp;
}

#[test]
fn bench_emits_parseable_csv_with_stable_param_count() {
    let dir = tempfile::tempdir().unwrap();
    let (_, config) = small_dataset(dir.path(), 0);
    run_ok(&["train", "--config", path_str(&config)]);
    let ckpt = dir.path().join("run/checkpoint.ckpt");
    let parse = |stdout: String| -> (f64, f64, u64) {
        let row = stdout.lines().last().unwrap().to_string();
        let f: Vec<&str> = row.split(',').collect();
        (
            f[0].parse().unwrap(),
            f[1].parse().unwrap(),
            f[2].parse().unwrap(),
        )
    };
    let (mean_a, std_a, count_a) = parse(run_ok(&[
        "bench",
        "--checkpoint",
        path_str(&ckpt),
        "--n",
        "2",
        "--lr-height",
        "8",
        "--lr-width",
        "8",
    ]));
    let (_, _, count_b) = parse(run_ok(&[
        "bench",
        "--checkpoint",
        path_str(&ckpt),
        "--n",
        "2",
        "--lr-height",
        "8",
        "--lr-width",
        "8",
    ]));
    assert!(mean_a > 0.0);
    assert!(std_a >= 0.0);
    assert_eq!(count_a, count_b);
    let out = run(&["bench", "--checkpoint", path_str(&ckpt), "--n", "0"]);
    assert!(!out.status.success());
}

#[test]
fn eval_supports_both_ssim_variants() {
    let dir = tempfile::tempdir().unwrap();
    let (data, config) = small_dataset(dir.path(), 0);
    run_ok(&["train", "--config", path_str(&config)]);
    let ckpt = dir.path().join("run/checkpoint.ckpt");
    for variant in ["windowed", "global"] {
        let out_dir = dir.path().join(format!("m_{variant}"));
        run_ok(&[
            "eval",
            "--checkpoint",
            path_str(&ckpt),
            "--data-dir",
            path_str(&data),
            "--out-dir",
            path_str(&out_dir),
            "--baseline",
            "none",
            "--ssim",
            variant,
        ]);
        assert!(out_dir.join("metrics_model.csv").exists());
    }
    let out = run(&[
        "eval",
        "--checkpoint",
        path_str(&ckpt),
        "--data-dir",
        path_str(&data),
        "--out-dir",
        path_str(&dir.path().join("bad")),
        "--ssim",
        "fancy",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("fancy"));
}

#[test]
fn image_round_trip_preserves_textures() {
    // sanity for the fixture generator itself: in range, structured
    let img = textured_image(64, 64, 70);
    let (h, w, c) = img.dims();
    assert_eq!((h, w, c), (64, 64, 3));
    let spread = img
        .data()
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    assert!(spread.1 - spread.0 > 0.3, "texture too flat: {spread:?}");
    let again = textured_image(64, 64, 70);
    assert_eq!(img, again);
}

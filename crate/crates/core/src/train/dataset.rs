//! Paired dataset construction: every low-res input is the exact box
//! downsample of its high-res target.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::patch::Split;
use crate::resample::box_downsample;

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetPair {
    pub id: String,
    pub lr: Image,
    pub hr: Image,
    pub split: Split,
}

impl DatasetPair {
    /// Upscale factor implied by the pair's dimensions.
    pub fn scale(&self) -> usize {
        self.hr.height() / self.lr.height()
    }

    /// Asserts the defining invariant: lr is exactly the box downsample
    /// of hr. Called on every pair at load time.
    pub fn verify(&self) -> Result<()> {
        let s = self.scale();
        if s == 0
            || self.lr.height() * s != self.hr.height()
            || self.lr.width() * s != self.hr.width()
            || self.lr.channels() != self.hr.channels()
        {
            return Err(Error::Dataset(format!(
                "pair {}: lr {}x{} does not divide hr {}x{}",
                self.id,
                self.lr.height(),
                self.lr.width(),
                self.hr.height(),
                self.hr.width()
            )));
        }
        let derived = box_downsample(&self.hr, s)?;
        if derived.data() != self.lr.data() {
            return Err(Error::Dataset(format!(
                "pair {}: lr is not the box downsample of hr",
                self.id
            )));
        }
        Ok(())
    }
}

/// Builds (lr, hr) pairs from named high-res patches. All patches must be
/// divisible by `scale`; violations are reported together by id.
pub fn build_pairs_named(
    hr_patches: Vec<(String, Image)>,
    scale: usize,
    split: Split,
) -> Result<Vec<DatasetPair>> {
    let offending: Vec<&str> = hr_patches
        .iter()
        .filter(|(_, img)| img.height() % scale != 0 || img.width() % scale != 0)
        .map(|(id, _)| id.as_str())
        .collect();
    if !offending.is_empty() {
        return Err(Error::Dataset(format!(
            "patches not divisible by scale {scale}: {}",
            offending.join(", ")
        )));
    }
    hr_patches
        .into_iter()
        .map(|(id, hr)| {
            let lr = box_downsample(&hr, scale)?;
            Ok(DatasetPair {
                id,
                lr,
                hr,
                split,
            })
        })
        .collect()
}

/// As [`build_pairs_named`] with zero-padded index ids.
pub fn build_pairs(hr_patches: Vec<Image>, scale: usize) -> Result<Vec<DatasetPair>> {
    let named = hr_patches
        .into_iter()
        .enumerate()
        .map(|(i, img)| (format!("{i:06}"), img))
        .collect();
    build_pairs_named(named, scale, Split::Train)
}

/// Deterministically assigns a seeded test split of the given fraction.
pub fn assign_splits(pairs: &mut [DatasetPair], test_fraction: f64, seed: u64) -> Result<()> {
    if !(0.0..=1.0).contains(&test_fraction) {
        return Err(Error::InvalidParameter {
            name: "test_fraction",
            reason: format!("must be in [0, 1], got {test_fraction}"),
        });
    }
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let n_test = (pairs.len() as f64 * test_fraction).round() as usize;
    for (rank, idx) in order.into_iter().enumerate() {
        pairs[idx].split = if rank < n_test { Split::Test } else { Split::Train };
    }
    Ok(())
}

/// Epoch order: a permutation that is a pure function of (seed, epoch),
/// chunked into batches with the final short batch kept.
pub fn shuffle_and_batch(
    n_pairs: usize,
    batch_size: usize,
    seed: u64,
    epoch: u64,
) -> Result<Vec<Vec<usize>>> {
    if n_pairs == 0 {
        return Err(Error::Dataset("cannot batch an empty dataset".into()));
    }
    if batch_size == 0 {
        return Err(Error::InvalidParameter {
            name: "batch_size",
            reason: "must be >= 1".into(),
        });
    }
    let mut order: Vec<usize> = (0..n_pairs).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(epoch);
    order.shuffle(&mut rng);
    Ok(order.chunks(batch_size).map(|c| c.to_vec()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn patch(h: usize, w: usize, v: f64) -> Image {
        Image::constant(h, w, 3, v).unwrap()
    }

    #[test]
    fn scale_four_gives_quarter_resolution() {
        let pairs = build_pairs(vec![patch(256, 256, 0.5)], 4).unwrap();
        assert_eq!(pairs[0].lr.dims(), (64, 64, 3));
        pairs[0].verify().unwrap();
    }

    #[test]
    fn scale_eight_gives_32_from_256() {
        let pairs = build_pairs(vec![patch(256, 256, 0.25)], 8).unwrap();
        assert_eq!(pairs[0].lr.dims(), (32, 32, 3));
    }

    #[test]
    fn constant_patch_downsamples_to_same_value() {
        let pairs = build_pairs(vec![patch(64, 64, 0.37)], 4).unwrap();
        assert!(pairs[0].lr.data().iter().all(|&v| (v - 0.37).abs() < 1e-12));
    }

    #[test]
    fn offending_ids_are_listed() {
        let items = vec![
            ("ok".to_string(), patch(64, 64, 0.1)),
            ("bad-a".to_string(), patch(63, 64, 0.1)),
            ("bad-b".to_string(), patch(64, 61, 0.1)),
        ];
        match build_pairs_named(items, 4, Split::Train) {
            Err(Error::Dataset(msg)) => {
                assert!(msg.contains("bad-a") && msg.contains("bad-b"));
                assert!(!msg.contains("ok,"));
            }
            other => panic!("expected dataset error, got {other:?}"),
        }
    }

    #[test]
    fn verify_rejects_tampered_lr() {
        let mut pairs = build_pairs(vec![patch(16, 16, 0.5)], 4).unwrap();
        pairs[0].verify().unwrap();
        pairs[0].lr = Image::constant(4, 4, 3, 0.51).unwrap();
        assert!(pairs[0].verify().is_err());
    }

    #[test]
    fn shuffle_is_a_pure_function_of_seed_and_epoch() {
        let a = shuffle_and_batch(32, 4, 7, 0).unwrap();
        let b = shuffle_and_batch(32, 4, 7, 0).unwrap();
        assert_eq!(a, b);
        let c = shuffle_and_batch(32, 4, 7, 1).unwrap();
        assert_ne!(a, c);
        let d = shuffle_and_batch(32, 4, 8, 0).unwrap();
        assert_ne!(a, d);
    }

    #[test]
    fn short_final_batch_is_kept() {
        let batches = shuffle_and_batch(5, 2, 0, 0).unwrap();
        let sizes: Vec<usize> = batches.iter().map(|b| b.len()).collect();
        assert_eq!(sizes, vec![2, 2, 1]);
        let mut seen: Vec<usize> = batches.into_iter().flatten().collect();
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn empty_dataset_is_an_error() {
        assert!(matches!(
            shuffle_and_batch(0, 2, 0, 0),
            Err(Error::Dataset(_))
        ));
        assert!(shuffle_and_batch(4, 0, 0, 0).is_err());
    }

    #[test]
    fn split_assignment_is_deterministic_and_sized() {
        let mut pairs = build_pairs((0..10).map(|_| patch(16, 16, 0.5)).collect(), 4).unwrap();
        assign_splits(&mut pairs, 0.3, 11).unwrap();
        let test_count = pairs.iter().filter(|p| p.split == Split::Test).count();
        assert_eq!(test_count, 3);

        let mut again = build_pairs((0..10).map(|_| patch(16, 16, 0.5)).collect(), 4).unwrap();
        assign_splits(&mut again, 0.3, 11).unwrap();
        let splits_a: Vec<Split> = pairs.iter().map(|p| p.split).collect();
        let splits_b: Vec<Split> = again.iter().map(|p| p.split).collect();
        assert_eq!(splits_a, splits_b);
    }

    #[test]
    fn zero_fraction_keeps_everything_in_train() {
        let mut pairs = build_pairs((0..5).map(|_| patch(16, 16, 0.5)).collect(), 4).unwrap();
        assign_splits(&mut pairs, 0.0, 3).unwrap();
        assert!(pairs.iter().all(|p| p.split == Split::Train));
    }
}

//! Dataset construction, the Adam/WFE training loop, evaluation, and
//! latency benchmarking.

pub mod adam;
pub mod bench;
pub mod dataset;
pub mod eval;
pub mod trainer;

pub use adam::{adam_step, AdamHyper, AdamState};
pub use bench::{benchmark_inference, BenchReport};
pub use dataset::{assign_splits, build_pairs, build_pairs_named, shuffle_and_batch, DatasetPair};
pub use eval::{
    evaluate, evaluate_baseline, infer, write_records_csv, EvalOutput, METRICS_CSV_HEADER,
};
pub use trainer::{train, LogRow, TrainConfig, TrainingLog, TRAINING_LOG_HEADER};

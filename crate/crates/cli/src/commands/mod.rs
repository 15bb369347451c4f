pub mod bench;
pub mod eval;
pub mod infer;
pub mod prepare;
pub mod report;
pub mod stitch;
pub mod train;

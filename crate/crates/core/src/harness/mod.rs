//! Experiment orchestration: state generation with an on-disk cache, depth
//! and compression sweeps, and the result CSV.

mod cache;
mod config;
mod report;
mod sweep;

pub use cache::{cache_key, generate_state, generate_state_cached, StateCache, CACHE_ENV};
pub use config::{ExperimentConfig, FamilyKind, StateFamily, TrainingOverrides};
pub use report::{mean_std, median, read_rows, summarize, write_rows, write_summary, ResultRow, SummaryRow, CSV_HEADER};
pub use sweep::{
    run_compression_sweep, run_depth_sweep, run_point, ExperimentResult, Metadata, PointSpec, SkippedPoint,
};

//! Time-interval-aware augmentation for sequential recommendation data.
//!
//! The crate turns timestamped interaction logs into per-user sequences,
//! measures how uniformly each sequence is spaced in time, and rewrites
//! non-uniform sequences with five interval-aware operators (insert, crop,
//! mask, substitute, reorder). A small Markov/co-occurrence/popularity
//! recommender and leave-one-out ranking metrics are included so the effect
//! of uniformity and augmentation can be measured end to end.
//!
//! Module map:
//!
//! * [`sequence`]: records, sequences, interval statistics, datasets.
//! * [`ingest`]: CSV/JSONL parsing, k-core filtering, leave-one-out splits.
//! * [`stats`]: uniformity ranking, thresholds and the uniform-ratio curve.
//! * [`partition`]: uniform / non-uniform / random subsets.
//! * [`similarity`]: windowed co-occurrence cosine item model.
//! * [`augment`]: the interval-aware operators and their random counterparts.
//! * [`synth`]: synthetic datasets with interval-coupled preference drift.
//! * [`eval`]: baseline recommender, HR/NDCG and the experiment runners.
//! * [`io`]: the JSONL sequence format shared by every stage.

pub mod augment;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod io;
pub mod partition;
pub mod rng;
pub mod sequence;
pub mod similarity;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use sequence::{
    interval_std, intervals, Dataset, InteractionRecord, IntervalProfile, IntervalSequence,
    UserSequence,
};

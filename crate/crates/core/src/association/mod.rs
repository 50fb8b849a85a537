//! Two-stage association: score split, fused Stage-I matching on confident
//! detections, Stage-II recovery on weak ones, and the track lifecycle.

mod cascade;
mod config;
mod fusion;
mod split;
mod track;

pub use cascade::{run_sequence, smc_step, StageMatch, StepReport, TrackerState};
pub use config::{FusionMode, SplitMode, TrackerConfig};
pub use fusion::{fuse_eq4_literal, fuse_gate, fuse_weighted, StageMatrices};
pub use split::{compute_split_threshold, partition_detections, DetectionPartition};
pub use track::{Track, TrackOutput, TrackStatus};

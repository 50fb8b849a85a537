//! Tracking-by-detection with a two-stage association cascade.
//!
//! Modules, bottom-up: [`geometry`] (boxes, IoU, detections), [`motion`]
//! (Kalman filter), [`appearance`] (feature extraction, sliced attention,
//! template banks), [`assignment`] (Hungarian solver), [`association`] (the
//! tracker), [`evaluation`] (CLEAR-MOT, IDF1), [`io`] and [`synth`].

pub mod appearance;
pub mod assignment;
pub mod association;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod io;
pub mod motion;
pub mod oracle;
pub mod selfcheck;
pub mod synth;

pub use appearance::{EmbeddingVector, FeatureBank, SimilarityModel};
pub use assignment::{hungarian_solve, AssignmentResult, CostMatrix, INFEASIBLE};
pub use association::{run_sequence, smc_step, FusionMode, TrackOutput, TrackerConfig, TrackerState};
pub use error::{Error, Result};
pub use evaluation::{evaluate, GroundTruthEntry, MetricsReport};
pub use geometry::{iou, BoundingBox, Detection, FrameObservations};
pub use motion::{KalmanState, MotionNoiseConfig};

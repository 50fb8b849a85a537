use crate::appearance::{EmbeddingVector, FeatureBank};
use crate::geometry::BoundingBox;
use crate::motion::KalmanState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackStatus {
    Active,
    Lost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: u64,
    pub kalman: KalmanState,
    pub bank: FeatureBank,
    /// Embedding of the most recent Stage-I (high-score) match.
    pub last_embedding: Option<EmbeddingVector>,
    pub status: TrackStatus,
    pub frames_since_update: u32,
    pub last_score: f64,
}

/// One emitted box: a track that was matched (or born) in `frame`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackOutput {
    pub frame: u32,
    pub id: u64,
    pub bbox: BoundingBox,
    pub score: f64,
}

//! Boxes, detections and per-frame containers.

use nalgebra::DMatrix;

use crate::appearance::EmbeddingVector;
use crate::error::{Error, Result};

/// Axis-aligned box in pixels, stored as top-left corner plus size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    left: f64,
    top: f64,
    width: f64,
    height: f64,
}

impl BoundingBox {
    pub fn new(left: f64, top: f64, width: f64, height: f64) -> Result<Self> {
        let finite = left.is_finite() && top.is_finite();
        if !(finite && width.is_finite() && height.is_finite() && width > 0.0 && height > 0.0) {
            return Err(Error::InvalidBox { width, height });
        }
        Ok(Self {
            left,
            top,
            width,
            height,
        })
    }

    pub fn from_center(cx: f64, cy: f64, width: f64, height: f64) -> Result<Self> {
        Self::new(cx - width / 2.0, cy - height / 2.0, width, height)
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn top(&self) -> f64 {
        self.top
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn right(&self) -> f64 {
        self.left + self.width
    }

    pub fn bottom(&self) -> f64 {
        self.top + self.height
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn center(&self) -> (f64, f64) {
        (self.left + self.width / 2.0, self.top + self.height / 2.0)
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Result<Self> {
        Self::new(self.left + dx, self.top + dy, self.width, self.height)
    }
}

/// Intersection over union of two boxes.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    if a == b {
        return 1.0;
    }
    let iw = a.right().min(b.right()) - a.left.max(b.left);
    let ih = a.bottom().min(b.bottom()) - a.top.max(b.top);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub bbox: BoundingBox,
    score: f64,
    pub frame: u32,
    pub embedding: Option<EmbeddingVector>,
}

impl Detection {
    pub fn new(bbox: BoundingBox, score: f64, frame: u32) -> Result<Self> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::InvalidScore(score));
        }
        Ok(Self {
            bbox,
            score,
            frame,
            embedding: None,
        })
    }

    pub fn with_embedding(mut self, embedding: EmbeddingVector) -> Self {
        self.embedding = Some(embedding);
        self
    }

    pub fn score(&self) -> f64 {
        self.score
    }

    /// Overrides the score, keeping the `[0, 1]` invariant.
    pub fn set_score(&mut self, score: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::InvalidScore(score));
        }
        self.score = score;
        Ok(())
    }
}

/// All detections reported for one frame, in detector order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameObservations {
    frame: u32,
    detections: Vec<Detection>,
}

impl FrameObservations {
    pub fn new(frame: u32, detections: Vec<Detection>) -> Result<Self> {
        if let Some(d) = detections.iter().find(|d| d.frame != frame) {
            return Err(Error::Shape(format!(
                "detection tagged with frame {} placed in frame {}",
                d.frame, frame
            )));
        }
        Ok(Self { frame, detections })
    }

    pub fn empty(frame: u32) -> Self {
        Self {
            frame,
            detections: Vec::new(),
        }
    }

    pub fn frame(&self) -> u32 {
        self.frame
    }

    pub fn detections(&self) -> &[Detection] {
        &self.detections
    }

    pub fn detections_mut(&mut self) -> &mut [Detection] {
        &mut self.detections
    }

    pub fn into_detections(self) -> Vec<Detection> {
        self.detections
    }

    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }
}

/// `1 - iou` between every predicted track box (rows) and detection (columns).
pub fn iou_distance_matrix(predicted: &[BoundingBox], detections: &[Detection]) -> DMatrix<f64> {
    DMatrix::from_fn(predicted.len(), detections.len(), |i, j| {
        1.0 - iou(&predicted[i], &detections[j].bbox)
    })
}

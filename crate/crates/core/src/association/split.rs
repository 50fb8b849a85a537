use crate::geometry::Detection;

use super::config::SplitMode;

/// Mean of the lowest `ceil(N/2)` scores; `det_floor` for an empty frame.
pub fn compute_split_threshold(dets: &[Detection], mode: SplitMode, det_floor: f64) -> f64 {
    match mode {
        SplitMode::Fixed(t) => t,
        SplitMode::AdaptiveMean => {
            let mut scores: Vec<f64> = dets.iter().map(Detection::score).collect();
            if scores.is_empty() {
                return det_floor;
            }
            scores.sort_by(f64::total_cmp);
            let half = scores.len().div_ceil(2);
            scores[..half].iter().sum::<f64>() / half as f64
        }
    }
}

/// Indices into the input, bucketed by score.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DetectionPartition {
    pub high: Vec<usize>,
    pub low: Vec<usize>,
    pub discarded: Vec<usize>,
}

/// `score > thres` is high, `det_floor <= score <= thres` is low, the rest
/// is background.
pub fn partition_detections(dets: &[Detection], thres: f64, det_floor: f64) -> DetectionPartition {
    let mut out = DetectionPartition::default();
    for (i, d) in dets.iter().enumerate() {
        let s = d.score();
        if s > thres {
            out.high.push(i);
        } else if s >= det_floor {
            out.low.push(i);
        } else {
            out.discarded.push(i);
        }
    }
    out
}

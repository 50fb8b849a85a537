use nalgebra::DMatrix;

use crate::assignment::{CostMatrix, INFEASIBLE};

use super::config::{FusionMode, TrackerConfig};

/// Per-stage matrices over tracks × detections.
///
/// `motion` holds IoU distance. `appearance` holds cosine similarity, or
/// `None` where either side has no embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct StageMatrices {
    pub motion: DMatrix<f64>,
    pub appearance: DMatrix<Option<f64>>,
}

impl StageMatrices {
    pub fn motion_only(motion: DMatrix<f64>) -> Self {
        let appearance = DMatrix::from_element(motion.nrows(), motion.ncols(), None);
        Self { motion, appearance }
    }

    /// Fuses both matrices under `cfg.fusion_mode`. Pairs without
    /// appearance fall back to the motion distance alone.
    pub fn fuse(&self, cfg: &TrackerConfig) -> CostMatrix {
        assert_eq!(self.motion.shape(), self.appearance.shape(), "stage matrix shapes differ");
        let values = DMatrix::from_fn(self.motion.nrows(), self.motion.ncols(), |i, j| {
            let m = self.motion[(i, j)];
            match (cfg.fusion_mode, self.appearance[(i, j)]) {
                (FusionMode::IouOnly, _) | (_, None) => m,
                (FusionMode::Gate, Some(a)) => gate_cost(m, a, cfg.gate_epsilon),
                (FusionMode::Eq4Literal, Some(a)) => eq4_literal_cost(m, a, cfg.gate_epsilon),
                (FusionMode::Weighted, Some(a)) => weighted_cost(1.0 - m, a, cfg.alpha),
            }
        });
        CostMatrix::new(values).expect("fused costs are finite or INFEASIBLE")
    }
}

fn gate_cost(m: f64, a: f64, eps: f64) -> f64 {
    if a < eps {
        INFEASIBLE
    } else {
        m + (1.0 - a)
    }
}

fn eq4_literal_cost(m: f64, a: f64, eps: f64) -> f64 {
    if a < eps {
        INFEASIBLE
    } else {
        m - (1.0 - a)
    }
}

fn weighted_cost(iou: f64, a: f64, alpha: f64) -> f64 {
    1.0 - (alpha * iou + (1.0 - alpha) * a)
}

fn zip_with(a: &DMatrix<f64>, b: &DMatrix<f64>, f: impl Fn(f64, f64) -> f64) -> CostMatrix {
    assert_eq!(a.shape(), b.shape(), "fusion inputs differ in shape");
    CostMatrix::new(a.zip_map(b, f)).expect("fused costs are finite or INFEASIBLE")
}

/// `M_m + (1 - M_a)` with pairs below `eps` similarity made infeasible.
pub fn fuse_gate(motion_distance: &DMatrix<f64>, appearance: &DMatrix<f64>, eps: f64) -> CostMatrix {
    zip_with(motion_distance, appearance, |m, a| gate_cost(m, a, eps))
}

/// `M_m - (1 - M_a)` with the same gate.
pub fn fuse_eq4_literal(motion_distance: &DMatrix<f64>, appearance: &DMatrix<f64>, eps: f64) -> CostMatrix {
    zip_with(motion_distance, appearance, |m, a| eq4_literal_cost(m, a, eps))
}

/// `1 - (α·IoU + (1 - α)·M_a)`, takes IoU similarity rather than distance.
pub fn fuse_weighted(iou_similarity: &DMatrix<f64>, appearance: &DMatrix<f64>, alpha: f64) -> CostMatrix {
    zip_with(iou_similarity, appearance, |s, a| weighted_cost(s, a, alpha))
}

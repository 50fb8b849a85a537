//! Quadrant slicing with additive positional codes.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

use super::features::FeatureMap;

pub const SLICE_COUNT: usize = 4;

/// Four equally shaped `tokens × channels` matrices: top-left, top-right,
/// bottom-left, bottom-right.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceSet {
    slices: [DMatrix<f64>; SLICE_COUNT],
    rows: usize,
    cols: usize,
}

impl SliceSet {
    /// Wraps slices that already carry their positional codes.
    pub fn new(slices: [DMatrix<f64>; SLICE_COUNT]) -> Result<Self> {
        let shape = slices[0].shape();
        if slices.iter().any(|s| s.shape() != shape) {
            return Err(Error::Shape("all four slices must share one shape".into()));
        }
        if shape.0 == 0 || shape.1 == 0 {
            return Err(Error::Shape("slices must be non-empty".into()));
        }
        if slices.iter().any(|s| s.iter().any(|v| !v.is_finite())) {
            return Err(Error::Shape("slice values must be finite".into()));
        }
        Ok(Self {
            slices,
            rows: 0,
            cols: 0,
        })
    }

    pub fn slices(&self) -> &[DMatrix<f64>; SLICE_COUNT] {
        &self.slices
    }

    pub fn tokens(&self) -> usize {
        self.slices[0].nrows()
    }

    pub fn channels(&self) -> usize {
        self.slices[0].ncols()
    }

    /// Spatial layout `(rows, cols)` of one quadrant, when built from a feature map.
    pub fn grid(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
}

/// Cuts `fm` into quadrants A..D, flattens each row-major into tokens and adds
/// the code `k + 1` to every entry of quadrant `k`.
pub fn slice_feature_map(fm: &FeatureMap) -> SliceSet {
    let (s, t) = (fm.height() / 2, fm.width() / 2);
    let origins = [(0, 0), (0, t), (s, 0), (s, t)];
    let slices = std::array::from_fn(|k| {
        let (y0, x0) = origins[k];
        let code = (k + 1) as f64;
        DMatrix::from_fn(s * t, fm.channels(), |token, c| {
            fm.get(c, y0 + token / t, x0 + token % t) + code
        })
    });
    SliceSet {
        slices,
        rows: s,
        cols: t,
    }
}

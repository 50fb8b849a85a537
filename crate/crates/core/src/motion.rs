//! Constant-velocity Kalman filter over `(cx, cy, a, h)` box coordinates.
//!
//! The state is the box center, aspect ratio `w / h`, height, and the
//! per-frame velocity of each. Process and measurement noise are scaled by
//! the current height so that uncertainty is relative to object size.

use nalgebra::{Cholesky, SMatrix, SVector};

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;

pub type StateVector = SVector<f64, 8>;
pub type StateCovariance = SMatrix<f64, 8, 8>;
type Measurement = SVector<f64, 4>;
type ObservationMatrix = SMatrix<f64, 4, 8>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionNoiseConfig {
    pub position_std_factor: f64,
    pub velocity_std_factor: f64,
}

impl Default for MotionNoiseConfig {
    fn default() -> Self {
        Self {
            position_std_factor: 1.0 / 20.0,
            velocity_std_factor: 1.0 / 160.0,
        }
    }
}

impl MotionNoiseConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(self.position_std_factor) && ok(self.velocity_std_factor) {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "noise factors must be > 0 (position={}, velocity={})",
                self.position_std_factor, self.velocity_std_factor
            )))
        }
    }

    fn initial_std(&self, h: f64) -> [f64; 8] {
        let p = self.position_std_factor * h;
        let v = self.velocity_std_factor * h;
        [2.0 * p, 2.0 * p, 1e-2, 2.0 * p, 10.0 * v, 10.0 * v, 1e-5, 10.0 * v]
    }

    fn process_std(&self, h: f64) -> [f64; 8] {
        let p = self.position_std_factor * h;
        let v = self.velocity_std_factor * h;
        [p, p, 1e-2, p, v, v, 1e-5, v]
    }

    fn measurement_std(&self, h: f64) -> [f64; 4] {
        let p = self.position_std_factor * h;
        [p, p, 1e-1, p]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    pub mean: StateVector,
    pub covariance: StateCovariance,
}

impl KalmanState {
    pub fn height(&self) -> f64 {
        self.mean[3]
    }

    /// Largest `|P[i][j] - P[j][i]|`.
    pub fn max_asymmetry(&self) -> f64 {
        let p = &self.covariance;
        (p - p.transpose()).abs().max()
    }
}

fn diag_from_std<const N: usize>(std: [f64; N]) -> SMatrix<f64, N, N> {
    SMatrix::<f64, N, N>::from_diagonal(&SVector::<f64, N>::from_iterator(
        std.into_iter().map(|s| s * s),
    ))
}

fn transition() -> StateCovariance {
    let mut f = StateCovariance::identity();
    for i in 0..4 {
        f[(i, i + 4)] = 1.0;
    }
    f
}

fn observation() -> ObservationMatrix {
    ObservationMatrix::identity()
}

fn symmetrize(p: StateCovariance) -> StateCovariance {
    (p + p.transpose()) * 0.5
}

fn box_to_measurement(b: &BoundingBox) -> Measurement {
    let (cx, cy) = b.center();
    Measurement::new(cx, cy, b.width() / b.height(), b.height())
}

pub fn kf_initiate(bbox: &BoundingBox, cfg: &MotionNoiseConfig) -> KalmanState {
    let z = box_to_measurement(bbox);
    let mut mean = StateVector::zeros();
    mean.fixed_rows_mut::<4>(0).copy_from(&z);
    KalmanState {
        mean,
        covariance: diag_from_std(cfg.initial_std(bbox.height())),
    }
}

pub fn kf_predict(state: &KalmanState, cfg: &MotionNoiseConfig) -> KalmanState {
    let f = transition();
    let q = diag_from_std(cfg.process_std(state.height()));
    KalmanState {
        mean: f * state.mean,
        covariance: symmetrize(f * state.covariance * f.transpose() + q),
    }
}

/// Standard Kalman correction against a box measurement.
///
/// Fails with [`Error::DegenerateFilter`] when the innovation covariance
/// cannot be factored; callers reinitialize the track in that case.
pub fn kf_update(
    state: &KalmanState,
    measurement: &BoundingBox,
    cfg: &MotionNoiseConfig,
) -> Result<KalmanState> {
    let h = observation();
    let r = diag_from_std(cfg.measurement_std(state.height()));
    let projected_mean = h * state.mean;
    let projected_cov = h * state.covariance * h.transpose() + r;

    let chol = Cholesky::new(projected_cov).ok_or(Error::DegenerateFilter)?;
    // K = P Hᵀ S⁻¹, solved as S Kᵀ = H P.
    let gain = chol.solve(&(h * state.covariance)).transpose();
    let innovation = box_to_measurement(measurement) - projected_mean;

    let mean = state.mean + gain * innovation;
    let covariance = state.covariance - gain * projected_cov * gain.transpose();
    if !mean.iter().chain(covariance.iter()).all(|v| v.is_finite()) {
        return Err(Error::DegenerateFilter);
    }
    Ok(KalmanState {
        mean,
        covariance: symmetrize(covariance),
    })
}

pub fn state_to_box(state: &KalmanState) -> Result<BoundingBox> {
    let (cx, cy, a, h) = (state.mean[0], state.mean[1], state.mean[2], state.mean[3]);
    if !(a > 0.0 && h > 0.0) {
        return Err(Error::DegenerateState {
            aspect: a,
            height: h,
        });
    }
    BoundingBox::from_center(cx, cy, a * h, h)
}

use crate::appearance::DEFAULT_BANK_CAPACITY;
use crate::error::{Error, Result};
use crate::motion::MotionNoiseConfig;

/// How Stage-I motion and appearance are combined into one cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FusionMode {
    /// `M_m + (1 - M_a)`, pairs with `M_a < ε` infeasible.
    #[default]
    Gate,
    /// `1 - (α·IoU + (1 - α)·M_a)`, no gating.
    Weighted,
    /// `M_m - (1 - M_a)`, pairs with `M_a < ε` infeasible.
    Eq4Literal,
    /// `M_m`, appearance ignored.
    IouOnly,
}

impl FusionMode {
    pub fn name(self) -> &'static str {
        match self {
            FusionMode::Gate => "gate",
            FusionMode::Weighted => "weighted",
            FusionMode::Eq4Literal => "eq4-literal",
            FusionMode::IouOnly => "iou-only",
        }
    }
}

impl std::str::FromStr for FusionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gate" => Ok(FusionMode::Gate),
            "weighted" => Ok(FusionMode::Weighted),
            "eq4-literal" => Ok(FusionMode::Eq4Literal),
            "iou-only" => Ok(FusionMode::IouOnly),
            other => Err(Error::Config(format!(
                "unknown fusion mode `{other}` (expected gate, weighted, eq4-literal or iou-only)"
            ))),
        }
    }
}

impl std::fmt::Display for FusionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SplitMode {
    /// Mean of the lower half of the frame's scores.
    #[default]
    AdaptiveMean,
    /// A constant threshold.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    pub gate_epsilon: f64,
    pub new_track_threshold: f64,
    pub match_cost_cap: f64,
    pub det_floor: f64,
    pub lost_ttl: u32,
    pub bank_capacity: usize,
    pub fusion_mode: FusionMode,
    pub alpha: f64,
    /// Run the low-score recovery stage at all.
    pub stage2_enabled: bool,
    pub stage2_appearance: bool,
    pub split_mode: SplitMode,
    pub motion: MotionNoiseConfig,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            gate_epsilon: 0.7,
            new_track_threshold: 0.7,
            match_cost_cap: 0.2,
            det_floor: 0.1,
            lost_ttl: 30,
            bank_capacity: DEFAULT_BANK_CAPACITY,
            fusion_mode: FusionMode::Gate,
            alpha: 0.5,
            stage2_enabled: true,
            stage2_appearance: false,
            split_mode: SplitMode::AdaptiveMean,
            motion: MotionNoiseConfig::default(),
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(0.0 <= self.det_floor && self.det_floor < self.new_track_threshold && self.new_track_threshold <= 1.0) {
            return fail(format!(
                "need 0 <= det_floor < new_track_threshold <= 1, got det_floor={} new_track_threshold={}",
                self.det_floor, self.new_track_threshold
            ));
        }
        if !(0.0..=1.0).contains(&self.gate_epsilon) {
            return fail(format!("gate_epsilon={} outside [0, 1]", self.gate_epsilon));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail(format!("alpha={} outside (0, 1)", self.alpha));
        }
        if self.lost_ttl < 1 {
            return fail("lost_ttl must be at least 1".into());
        }
        if self.bank_capacity < 1 {
            return fail("bank_capacity must be at least 1".into());
        }
        if !self.match_cost_cap.is_finite() {
            return fail(format!("match_cost_cap={} is not finite", self.match_cost_cap));
        }
        if let SplitMode::Fixed(t) = self.split_mode {
            if !(self.det_floor..=1.0).contains(&t) {
                return fail(format!("fixed split threshold {t} outside [det_floor, 1]"));
            }
        }
        self.motion.validate()
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Center position of an identity at a 0-based frame index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub frame: u32,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentitySpec {
    pub width: f64,
    pub height: f64,
    pub waypoints: Vec<Waypoint>,
    /// Inclusive 0-based frame span in which the identity exists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active: Option<[u32; 2]>,
    /// Explicit appearance direction; random when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub appearance: Option<Vec<f64>>,
}

/// Identity `b` is steered through identity `a`'s position at the span midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingEvent {
    pub a: usize,
    pub b: usize,
    pub span: [u32; 2],
}

/// Detection scores of `identity` are replaced by `score` over the inclusive span.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OcclusionDip {
    pub identity: usize,
    pub span: [u32; 2],
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AppearanceSource {
    /// Identity vector plus Gaussian noise.
    #[default]
    Vector,
    /// Rendered crops passed through the stub extractor and attention block;
    /// `appearance_noise_sigma` is then the per-pixel noise.
    Rendered,
}

fn default_embedding_dim() -> usize {
    16
}

fn default_score_range() -> [f64; 2] {
    [0.75, 0.98]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub frames: u32,
    pub identities: Vec<IdentitySpec>,
    #[serde(default)]
    pub crossing_events: Vec<CrossingEvent>,
    #[serde(default)]
    pub occlusion_dips: Vec<OcclusionDip>,
    pub appearance_noise_sigma: f64,
    pub detector_miss_rate: f64,
    pub seed: u64,
    #[serde(default = "default_embedding_dim")]
    pub embedding_dim: usize,
    #[serde(default = "default_score_range")]
    pub score_range: [f64; 2],
    #[serde(default)]
    pub appearance_source: AppearanceSource,
}

impl ScenarioSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Config(format!("scenario spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        let in_range = |s: [u32; 2]| s[0] <= s[1] && s[1] < self.frames;
        if self.frames == 0 {
            return fail("scenario needs at least one frame".into());
        }
        let n = self.identities.len();
        for (i, id) in self.identities.iter().enumerate() {
            if !(id.width > 0.0 && id.height > 0.0 && id.width.is_finite() && id.height.is_finite()) {
                return fail(format!("identity {i}: box size must be positive"));
            }
            if id.waypoints.is_empty() {
                return fail(format!("identity {i}: needs at least one waypoint"));
            }
            if id.waypoints.windows(2).any(|w| w[0].frame >= w[1].frame) {
                return fail(format!("identity {i}: waypoint frames must strictly increase"));
            }
            if id.waypoints.iter().any(|w| w.frame >= self.frames || !w.x.is_finite() || !w.y.is_finite()) {
                return fail(format!("identity {i}: waypoint outside [0, {})", self.frames));
            }
            if id.active.is_some_and(|s| !in_range(s)) {
                return fail(format!("identity {i}: active span outside [0, {})", self.frames));
            }
            if let Some(a) = &id.appearance {
                if a.len() != self.embedding_dim {
                    return fail(format!("identity {i}: appearance has {} values, expected {}", a.len(), self.embedding_dim));
                }
            }
        }
        for c in &self.crossing_events {
            if c.a >= n || c.b >= n || c.a == c.b || !in_range(c.span) {
                return fail(format!("invalid crossing event {c:?}"));
            }
        }
        for d in &self.occlusion_dips {
            if d.identity >= n || !in_range(d.span) || !(0.0..=1.0).contains(&d.score) {
                return fail(format!("invalid occlusion dip {d:?}"));
            }
        }
        if !(self.appearance_noise_sigma >= 0.0 && self.appearance_noise_sigma.is_finite()) {
            return fail("appearance_noise_sigma must be >= 0".into());
        }
        if !(0.0..1.0).contains(&self.detector_miss_rate) {
            return fail("detector_miss_rate must be in [0, 1)".into());
        }
        if self.embedding_dim == 0 {
            return fail("embedding_dim must be positive".into());
        }
        let [lo, hi] = self.score_range;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return fail("score_range must satisfy 0 <= lo <= hi <= 1".into());
        }
        Ok(())
    }
}

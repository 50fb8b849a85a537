use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::appearance::{CropSpec, EmbeddingVector, SimilarityModel};
use crate::error::Result;
use crate::evaluation::GroundTruthEntry;
use crate::geometry::{BoundingBox, Detection, FrameObservations};

use super::render::IdentityTexture;
use super::spec::{AppearanceSource, IdentitySpec, ScenarioSpec, Waypoint};

/// Generator output. Frame `k` of the spec is emitted as frame `k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub ground_truth: Vec<GroundTruthEntry>,
    /// One entry per frame, empty frames included.
    pub frames: Vec<FrameObservations>,
    /// Identity index of each detection, parallel to `frames`.
    pub detection_identities: Vec<Vec<usize>>,
}

/// Piecewise-linear center at frame `t`, constant beyond the end waypoints.
pub fn position_at(waypoints: &[Waypoint], t: f64) -> (f64, f64) {
    let first = waypoints[0];
    if t <= first.frame as f64 {
        return (first.x, first.y);
    }
    for w in waypoints.windows(2) {
        let (a, b) = (w[0], w[1]);
        if t <= b.frame as f64 {
            let s = (t - a.frame as f64) / (b.frame - a.frame) as f64;
            return (a.x + s * (b.x - a.x), a.y + s * (b.y - a.y));
        }
    }
    let last = waypoints[waypoints.len() - 1];
    (last.x, last.y)
}

/// Waypoints after applying every crossing event in order.
pub fn resolved_waypoints(spec: &ScenarioSpec) -> Vec<Vec<Waypoint>> {
    let mut paths: Vec<Vec<Waypoint>> = spec.identities.iter().map(|i| i.waypoints.clone()).collect();
    for c in &spec.crossing_events {
        let mid = (c.span[0] + c.span[1]) / 2;
        let (x, y) = position_at(&paths[c.a], mid as f64);
        let path = &mut paths[c.b];
        path.retain(|w| w.frame != mid);
        let at = path.partition_point(|w| w.frame < mid);
        path.insert(at, Waypoint { frame: mid, x, y });
    }
    paths
}

fn is_active(id: &IdentitySpec, t: u32) -> bool {
    id.active.is_none_or(|[s, e]| s <= t && t <= e)
}

fn unit_vector(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        if v.iter().any(|x| *x != 0.0) {
            return v;
        }
    }
}

pub fn generate_scenario(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let identity_vectors = spec
        .identities
        .iter()
        .map(|id| {
            let raw = match &id.appearance {
                Some(v) => v.clone(),
                None => unit_vector(spec.embedding_dim, &mut rng),
            };
            EmbeddingVector::normalized(raw)
        })
        .collect::<Result<Vec<_>>>()?;
    let paths = resolved_waypoints(spec);
    let noise = Normal::new(0.0, spec.appearance_noise_sigma).expect("validated sigma");
    let [lo, hi] = spec.score_range;

    let mut out = Scenario {
        ground_truth: Vec::new(),
        frames: Vec::with_capacity(spec.frames as usize),
        detection_identities: Vec::with_capacity(spec.frames as usize),
    };
    for t in 0..spec.frames {
        let frame = t + 1;
        let mut dets: Vec<(usize, Detection)> = Vec::new();
        for (i, id) in spec.identities.iter().enumerate() {
            if !is_active(id, t) {
                continue;
            }
            let (x, y) = position_at(&paths[i], t as f64);
            let bbox = BoundingBox::from_center(x, y, id.width, id.height)?;
            out.ground_truth.push(GroundTruthEntry {
                frame,
                id: i as i64 + 1,
                bbox,
            });
            let missed = rng.random::<f64>() < spec.detector_miss_rate;
            let mut score = if lo < hi { rng.random_range(lo..=hi) } else { lo };
            let emb: Vec<f64> = identity_vectors[i]
                .as_slice()
                .iter()
                .map(|v| v + if spec.appearance_noise_sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 })
                .collect();
            if missed {
                continue;
            }
            if let Some(d) = spec
                .occlusion_dips
                .iter()
                .find(|d| d.identity == i && d.span[0] <= t && t <= d.span[1])
            {
                score = d.score;
            }
            let det = Detection::new(bbox, score, frame)?.with_embedding(EmbeddingVector::normalized(emb)?);
            dets.push((i, det));
        }
        dets.shuffle(&mut rng);
        let (ids, dets): (Vec<usize>, Vec<Detection>) = dets.into_iter().unzip();
        out.frames.push(FrameObservations::new(frame, dets)?);
        out.detection_identities.push(ids);
    }

    if spec.appearance_source == AppearanceSource::Rendered {
        render_embeddings(&mut out, spec)?;
    }
    Ok(out)
}

/// Replaces every embedding with the model's embedding of a rendered crop.
fn render_embeddings(scenario: &mut Scenario, spec: &ScenarioSpec) -> Result<()> {
    let model = SimilarityModel::seeded(spec.seed);
    let textures: Vec<IdentityTexture> = (0..spec.identities.len())
        .map(|i| IdentityTexture::random(spec.seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(i as u64 + 1)), 4, 8))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(1));
    for (frame, ids) in scenario.frames.iter_mut().zip(&scenario.detection_identities) {
        for (det, &i) in frame.detections_mut().iter_mut().zip(ids) {
            let crop = textures[i].render(CropSpec::default(), spec.appearance_noise_sigma, &mut rng);
            det.embedding = Some(model.embed(&crop)?);
        }
    }
    Ok(())
}

/// Knobs for [`random_scenario`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomScenarioParams {
    pub identities: usize,
    pub frames: u32,
    pub seed: u64,
    pub appearance_noise_sigma: f64,
    pub detector_miss_rate: f64,
    pub field: (f64, f64),
    /// Pixels per frame.
    pub max_speed: f64,
    /// Largest heading change between legs, radians.
    pub max_turn: f64,
    /// Give identities random entry/exit frames instead of full coverage.
    pub staggered: bool,
    pub appearance_source: AppearanceSource,
}

impl Default for RandomScenarioParams {
    fn default() -> Self {
        Self {
            identities: 10,
            frames: 300,
            seed: 0,
            appearance_noise_sigma: 0.05,
            detector_miss_rate: 0.05,
            field: (1920.0, 1080.0),
            max_speed: 2.0,
            max_turn: std::f64::consts::FRAC_PI_6,
            staggered: false,
            appearance_source: AppearanceSource::Vector,
        }
    }
}

fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    (a + PI).rem_euclid(TAU) - PI
}

/// Pedestrian-like walkers: a new leg every 10 frames with a bounded turn and
/// a small speed change, steering back toward the field center near edges.
pub fn random_scenario(p: &RandomScenarioParams) -> ScenarioSpec {
    const LEG: u32 = 10;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let (fw, fh) = p.field;
    let min_speed = 0.25 * p.max_speed;
    let identities = (0..p.identities)
        .map(|_| {
            let width = rng.random_range(30.0..60.0);
            let height = width * 2.5;
            let (mx, my) = (width + 0.2 * fw, height + 0.2 * fh);
            let mut x = rng.random_range(mx..fw - mx);
            let mut y = rng.random_range(my..fh - my);
            let mut heading = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            let mut speed = rng.random_range(min_speed..=p.max_speed);
            let mut waypoints = vec![Waypoint { frame: 0, x, y }];
            let mut t = 0;
            while t + 1 < p.frames {
                let leg = LEG.min(p.frames - 1 - t);
                let near_edge = x < mx || x > fw - mx || y < my || y > fh - my;
                let turn = if near_edge {
                    let home = (fh / 2.0 - y).atan2(fw / 2.0 - x);
                    wrap_angle(home - heading).clamp(-p.max_turn, p.max_turn)
                } else {
                    rng.random_range(-p.max_turn..=p.max_turn)
                };
                heading = wrap_angle(heading + turn);
                speed = (speed + rng.random_range(-0.15..=0.15) * p.max_speed).clamp(min_speed, p.max_speed);
                x += heading.cos() * speed * leg as f64;
                y += heading.sin() * speed * leg as f64;
                t += leg;
                waypoints.push(Waypoint { frame: t, x, y });
            }
            let active = p.staggered.then(|| {
                let a = rng.random_range(0..p.frames);
                let b = rng.random_range(0..p.frames);
                [a.min(b), a.max(b)]
            });
            IdentitySpec {
                width,
                height,
                waypoints,
                active,
                appearance: None,
            }
        })
        .collect();
    ScenarioSpec {
        frames: p.frames,
        identities,
        crossing_events: Vec::new(),
        occlusion_dips: Vec::new(),
        appearance_noise_sigma: p.appearance_noise_sigma,
        detector_miss_rate: p.detector_miss_rate,
        seed: p.seed,
        embedding_dim: 16,
        score_range: [0.75, 0.98],
        appearance_source: p.appearance_source,
    }
}

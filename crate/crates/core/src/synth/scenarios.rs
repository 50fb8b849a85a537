//! Hand-built scenarios that exercise specific association behaviour.

use super::spec::{AppearanceSource, CrossingEvent, IdentitySpec, OcclusionDip, ScenarioSpec, Waypoint};

const DIM: usize = 16;

/// Unit vector in the plane of the first two axes at the given cosine to axis 0.
fn direction(cos: f64, axis: usize) -> Vec<f64> {
    let mut v = vec![0.0; DIM];
    v[0] = cos;
    v[axis] = (1.0 - cos * cos).sqrt();
    v
}

fn person(waypoints: &[(u32, f64, f64)], appearance: Vec<f64>) -> IdentitySpec {
    IdentitySpec {
        width: 40.0,
        height: 100.0,
        waypoints: waypoints.iter().map(|&(frame, x, y)| Waypoint { frame, x, y }).collect(),
        active: None,
        appearance: Some(appearance),
    }
}

fn base(frames: u32, identities: Vec<IdentitySpec>, sigma: f64, seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        frames,
        identities,
        crossing_events: Vec::new(),
        occlusion_dips: Vec::new(),
        appearance_noise_sigma: sigma,
        detector_miss_rate: 0.0,
        seed,
        embedding_dim: DIM,
        score_range: [0.75, 0.98],
        appearance_source: AppearanceSource::Vector,
    }
}

/// Two people with orthogonal appearance walk through each other at frame 30.
/// One moves right at 2 px/frame, the other down at 5 px/frame.
pub fn crossing_scenario(seed: u64) -> ScenarioSpec {
    let a = person(&[(0, 100.0, 300.0), (59, 218.0, 300.0)], direction(1.0, 1));
    let b = person(&[(0, 160.0, 150.0), (59, 160.0, 445.0)], direction(0.0, 1));
    let mut spec = base(60, vec![a, b], 0.05, seed);
    spec.crossing_events.push(CrossingEvent { a: 0, b: 1, span: [20, 40] });
    spec
}

/// Person 0 walks right and is partly occluded (score 0.3) for frames
/// 30..=34. At frame 30 person 1, whose appearance has cosine 0.65 with
/// person 0, steps out at exactly person 0's position and walks down.
pub fn adversarial_crossing_scenario(seed: u64) -> ScenarioSpec {
    let a = person(&[(0, 100.0, 300.0), (59, 218.0, 300.0)], direction(1.0, 1));
    let mut b = person(&[(30, 160.0, 300.0), (59, 160.0, 387.0)], direction(0.65, 1));
    b.active = Some([30, 59]);
    let mut spec = base(60, vec![a, b], 0.01, seed);
    spec.occlusion_dips.push(OcclusionDip { identity: 0, span: [30, 34], score: 0.3 });
    spec
}

/// Identity index whose score dips in [`occlusion_dip_scenario`].
pub const DIPPED_IDENTITY: usize = 1;

/// Three well-separated people with score 0.9. Person 1 drops to 0.3 for
/// frames 20..=22 and turns at the start of the dip, so the frame's split
/// threshold is mean(0.3, 0.9) = 0.6.
pub fn occlusion_dip_scenario(seed: u64) -> ScenarioSpec {
    let far = |y: f64, axis: usize| person(&[(0, 100.0, y), (49, 173.5, y)], direction(0.0, axis));
    let turner = person(&[(0, 100.0, 500.0), (20, 130.0, 500.0), (49, 115.5, 529.0)], direction(0.0, 2));
    let mut spec = base(50, vec![far(200.0, 1), turner, far(800.0, 3)], 0.05, seed);
    spec.score_range = [0.9, 0.9];
    spec.occlusion_dips.push(OcclusionDip { identity: DIPPED_IDENTITY, span: [20, 22], score: 0.3 });
    spec
}

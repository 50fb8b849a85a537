//! Seeded synthetic scenarios: scripted trajectories, crossings, score dips,
//! detector misses and noisy appearance.

mod generate;
mod render;
mod scenarios;
mod spec;

pub use generate::{generate_scenario, position_at, random_scenario, resolved_waypoints, RandomScenarioParams, Scenario};
pub use render::IdentityTexture;
pub use scenarios::{adversarial_crossing_scenario, crossing_scenario, occlusion_dip_scenario, DIPPED_IDENTITY};
pub use spec::{AppearanceSource, CrossingEvent, IdentitySpec, OcclusionDip, ScenarioSpec, Waypoint};

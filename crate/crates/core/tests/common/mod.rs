//! Shared scenario scaffolding for the engine integration tests: bundled
//! domains, small hand-built waypoint graphs, and an obstacle-free world.
//!
//! Each integration-test binary compiles this module separately and uses
//! its own subset of the helpers.
#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::{Matrix3, Vector3};
use navplan_core::belief::{
    BeliefConfig, GaussianBelief, MeasurementNoise, MotionNoise, ObservationMode,
};
use navplan_core::engine::{standard_registry, SearchParams, SimContext};
use navplan_core::pddlplus::{ground, parse_domain, parse_problem, GroundedModel};
use navplan_core::sampler::{Edge, Waypoint, WaypointGraph};
use navplan_core::world::{Cell, GridMap, Landmark, Pose, WorldModel};

/// Path of a file bundled at the repository root `fixtures/` directory.
pub fn bundled(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn read_bundled(name: &str) -> String {
    let path = bundled(name);
    std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

/// Minimal navigation problem over the bundled corridor domain.
pub fn nav_problem() -> String {
    "(define (problem nav-test)\n\
     \x20 (:domain robot-navigation)\n\
     \x20 (:objects wp_start wp_goal - waypoint)\n\
     \x20 (:init (robot_at wp_start) (idle) (= (counter) 0))\n\
     \x20 (:goal (and (robot_at wp_goal))))\n"
        .to_string()
}

/// Battery variant: reach the goal without the battery flattening.
pub fn battery_problem() -> String {
    "(define (problem battery-test)\n\
     \x20 (:domain robot-navigation-battery)\n\
     \x20 (:objects wp_start wp_goal - waypoint)\n\
     \x20 (:init (robot_at wp_start) (idle) (= (counter) 0) (= (charge) 100))\n\
     \x20 (:goal (and (robot_at wp_goal) (not (battery_down)))))\n"
        .to_string()
}

/// `n` waypoints in a line along the x axis, `spacing` metres apart,
/// consecutive waypoints connected; start at index 0, goal at the far end.
pub fn line_graph(n: usize, spacing: f64) -> WaypointGraph {
    WaypointGraph {
        waypoints: (0..n)
            .map(|i| Waypoint { id: i, pose: Pose::new(i as f64 * spacing, 0.0, 0.0) })
            .collect(),
        edges: (1..n).map(|i| Edge { a: i - 1, b: i, length: spacing }).collect(),
        start_id: 0,
        goal_id: n - 1,
    }
}

/// A wide-open free map covering x ∈ [−5, 25], y ∈ [−5, 15].
pub fn open_world() -> WorldModel {
    WorldModel {
        map: GridMap::uniform(0.5, 60, 40, (-5.0, -5.0), Cell::Free),
        landmarks: Vec::new(),
    }
}

pub fn open_world_with_landmarks(landmarks: Vec<Landmark>) -> WorldModel {
    WorldModel { map: GridMap::uniform(0.5, 60, 40, (-5.0, -5.0), Cell::Free), landmarks }
}

/// Filter configuration used across the engine tests: small per-tick motion
/// noise, range-bearing sensor noise, deterministic observation mode.
pub fn belief_cfg() -> BeliefConfig {
    BeliefConfig {
        motion_noise: MotionNoise::diagonal(1e-4, 1e-4, 1e-5).unwrap(),
        measurement_noise: MeasurementNoise::diagonal(1e-2, 1e-3).unwrap(),
        sensor_range: 4.0,
        mode: ObservationMode::Nominal,
        rng_seed: 7,
    }
}

/// Isotropic initial pose uncertainty; trace 0.03.
pub fn start_belief(pose: Pose) -> GaussianBelief {
    GaussianBelief::new(pose, Matrix3::from_diagonal(&Vector3::new(0.01, 0.01, 0.01))).unwrap()
}

/// A grounded model plus the world it runs in; owns everything a
/// [`SimContext`] borrows.
pub struct Scenario {
    pub model: GroundedModel,
    pub world: WorldModel,
    pub start: Pose,
}

impl Scenario {
    pub fn build(domain_text: &str, problem_text: &str, graph: &WaypointGraph) -> Scenario {
        Scenario::in_world(domain_text, problem_text, graph, open_world())
    }

    pub fn in_world(
        domain_text: &str,
        problem_text: &str,
        graph: &WaypointGraph,
        world: WorldModel,
    ) -> Scenario {
        let domain = parse_domain(domain_text).expect("domain parses");
        let problem = parse_problem(problem_text, &domain).expect("problem parses");
        let model = ground(&domain, &problem, graph, &standard_registry()).expect("grounds");
        Scenario { model, world, start: graph.waypoints[graph.start_id].pose }
    }

    pub fn ctx(&self, params: SearchParams) -> SimContext<'_> {
        self.ctx_with_charge(params, None)
    }

    pub fn ctx_with_charge(&self, params: SearchParams, charge: Option<f64>) -> SimContext<'_> {
        SimContext::new(
            &self.model,
            &self.world,
            params,
            belief_cfg(),
            start_belief(self.start),
            charge,
        )
        .expect("context builds")
    }
}

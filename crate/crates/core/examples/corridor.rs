//! Full pipeline on a battery-powered corridor scenario: build the world,
//! sample a waypoint graph, ground the domain over it, plan at three tick
//! lengths, and ratify each plan at a ten-times-finer discretization.
//!
//! Run with `cargo run -p navplan-core --example corridor`.

use nalgebra::{Matrix3, Vector3};
use navplan_core::belief::{
    BeliefConfig, GaussianBelief, MeasurementNoise, MotionNoise, ObservationMode,
};
use navplan_core::engine::{plan, standard_registry, validate, PlanOutcome, SearchParams, SimContext};
use navplan_core::pddlplus::{ground, parse_domain, parse_problem};
use navplan_core::sampler::{sample_graph, SamplerParams};
use navplan_core::world::{Cell, GridMap, Landmark, Pose, WorldModel};

fn main() {
    // A 14 m x 5 m free corridor at 0.1 m resolution, with four landmarks
    // along the lower wall.
    let map = GridMap::uniform(0.1, 140, 50, (0.0, 0.0), Cell::Free);
    let landmarks = vec![
        Landmark { id: 1, x: 3.0, y: 1.0 },
        Landmark { id: 2, x: 6.0, y: 1.0 },
        Landmark { id: 3, x: 9.0, y: 1.0 },
        Landmark { id: 4, x: 12.0, y: 1.0 },
    ];
    let start = Pose::new(1.5, 2.5, 0.0);
    let goal = Pose::new(12.5, 2.5, 0.0);
    let graph = sample_graph(
        &map,
        &landmarks,
        start,
        goal,
        &SamplerParams { rng_seed: 11, ..SamplerParams::default() },
        0.2,
    )
    .expect("sampling succeeds");
    println!(
        "graph: {} waypoints, {} edges, start-goal connected: {}",
        graph.waypoints.len(),
        graph.edges.len(),
        graph.connects_start_goal()
    );

    let domain_text = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../fixtures/nav-battery-domain.pddl"
    ))
    .unwrap();
    let charge: f64 = std::env::var("CHARGE")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(95.0);
    let problem_text = format!(
        "(define (problem corridor)\n\
         \x20 (:domain robot-navigation-battery)\n\
         \x20 (:objects wp_start wp_goal - waypoint)\n\
         \x20 (:init (robot_at wp_start) (idle) (= (counter) 0) (= (charge) {charge}))\n\
         \x20 (:goal (and (robot_at wp_goal) (not (battery_down)))))\n"
    );
    let domain = parse_domain(&domain_text).unwrap();
    let problem = parse_problem(&problem_text, &domain).unwrap();
    let model = ground(&domain, &problem, &graph, &standard_registry()).unwrap();
    println!(
        "grounded: {} actions, {} processes, {} events",
        model.actions.len(),
        model.processes.len(),
        model.events.len(),
    );

    let world = WorldModel { map, landmarks };
    let belief_cfg = BeliefConfig {
        motion_noise: MotionNoise::diagonal(1e-4, 1e-4, 1e-5).unwrap(),
        measurement_noise: MeasurementNoise::diagonal(1e-2, 1e-3).unwrap(),
        sensor_range: 4.0,
        mode: ObservationMode::Nominal,
        rng_seed: 7,
    };
    let belief =
        GaussianBelief::new(start, Matrix3::from_diagonal(&Vector3::new(0.01, 0.01, 0.01)))
            .unwrap();

    let max_expanded: usize = std::env::var("MAX_EXPANDED")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(SearchParams::default().max_expanded);
    let eta: Option<f64> = match std::env::var("ETA").as_deref() {
        Ok("none") => None,
        Ok(v) => Some(v.parse().unwrap()),
        Err(_) => Some(0.20),
    };
    for delta in [3.0, 2.0, 1.0, 0.5] {
        let params = SearchParams {
            delta,
            horizon: 30.0,
            eta,
            max_expanded,
            ..SearchParams::default()
        };
        let ctx = SimContext::new(
            &model,
            &world,
            params,
            belief_cfg.clone(),
            belief.clone(),
            Some(charge),
        )
        .unwrap();
        let result = plan(&ctx, &graph).unwrap();
        match result.outcome {
            PlanOutcome::Planned(trace) => {
                println!(
                    "delta={delta}: {} steps, end={} s, cost={:.4}, final trace={:.4}, explored={}",
                    trace.steps.len(),
                    trace.end_clock,
                    trace.cost,
                    trace.final_trace,
                    result.stats.states_explored
                );
                let report = validate(&trace, &ctx, 10).unwrap();
                println!(
                    "  validation: {} (max trace divergence {:.5})",
                    if report.passed { "pass" } else { "fail" },
                    report.max_trace_divergence
                );
                for f in &report.failures {
                    println!("  failure: {f}");
                }
            }
            PlanOutcome::Infeasible(reason) => {
                println!(
                    "delta={delta}: infeasible ({reason}), explored={}, generated={}",
                    result.stats.states_explored, result.stats.states_generated
                );
            }
        }
    }
}

//! Plan ratification: self-consistency at a finer tick, detection of
//! discretization artifacts, and rejection of traces that do not replay.

mod common;

use common::*;
use navplan_core::engine::{plan, validate, EngineError, PlanOutcome, PlanTrace, SearchParams};
use navplan_core::sampler::WaypointGraph;

fn planned(graph: &WaypointGraph, scenario: &Scenario, params: SearchParams) -> PlanTrace {
    let ctx = scenario.ctx(params);
    match plan(&ctx, graph).unwrap().outcome {
        PlanOutcome::Planned(trace) => *trace,
        PlanOutcome::Infeasible(r) => panic!("expected a plan, got infeasible ({r})"),
    }
}

#[test]
fn fine_tick_plan_passes_at_refinement_ten() {
    let graph = line_graph(3, 3.0);
    let scenario = Scenario::build(&read_bundled("nav-domain.pddl"), &nav_problem(), &graph);
    let params = SearchParams { delta: 0.5, ..SearchParams::default() };
    let trace = planned(&graph, &scenario, params.clone());

    let ctx = scenario.ctx(params);
    let report = validate(&trace, &ctx, 10).unwrap();
    assert!(report.passed, "failures: {:?}", report.failures);
    assert!(report.failures.is_empty());
    assert_eq!(report.refinement, 10);
    assert!(report.max_trace_divergence >= 0.0);
    assert!(report.max_trace_divergence < 0.05, "{}", report.max_trace_divergence);
    assert!(report.to_text().contains("result pass\n"));
}

#[test]
fn empty_plan_at_the_goal_is_trivially_valid() {
    let graph = line_graph(1, 3.0);
    let scenario = Scenario::build(&read_bundled("nav-domain.pddl"), &nav_problem(), &graph);
    let trace = planned(&graph, &scenario, SearchParams::default());
    assert!(trace.steps.is_empty());

    let ctx = scenario.ctx(SearchParams::default());
    let report = validate(&trace, &ctx, 10).unwrap();
    assert!(report.passed);
    assert_eq!(report.max_trace_divergence, 0.0);
}

/// A long tick hides a low-battery latch the continuous model would hit:
/// coarse Euler integration underestimates the drain, the plan looks safe,
/// and the refined replay exposes the event the plan never saw.
#[test]
fn coarse_tick_battery_plan_is_flagged_with_the_event_named() {
    let graph = line_graph(4, 2.7);
    let scenario =
        Scenario::build(&read_bundled("nav-battery-domain.pddl"), &battery_problem(), &graph);
    let coarse = SearchParams { delta: 3.0, d_factor: 2.0, ..SearchParams::default() };

    let ctx = scenario.ctx_with_charge(coarse.clone(), Some(69.0));
    let trace = match plan(&ctx, &graph).unwrap().outcome {
        PlanOutcome::Planned(t) => *t,
        PlanOutcome::Infeasible(r) => panic!("coarse plan should exist ({r})"),
    };
    assert!(
        trace.fired.iter().all(|(_, n)| n != "battery_status"),
        "the coarse plan believes the battery stays healthy"
    );

    let report = validate(&trace, &ctx, 10).unwrap();
    assert!(!report.passed);
    assert!(
        report.failures.iter().any(|f| f.contains("battery_status")),
        "failures: {:?}",
        report.failures
    );
    assert!(report.to_text().contains("result fail\n"));
}

/// The same scenario planned with a short tick arrives long before the
/// battery threshold and survives the same scrutiny.
#[test]
fn fine_tick_battery_plan_passes_the_same_scrutiny() {
    let graph = line_graph(4, 2.7);
    let scenario =
        Scenario::build(&read_bundled("nav-battery-domain.pddl"), &battery_problem(), &graph);
    let fine = SearchParams { delta: 0.5, d_factor: 2.0, ..SearchParams::default() };

    let ctx = scenario.ctx_with_charge(fine.clone(), Some(69.0));
    let trace = match plan(&ctx, &graph).unwrap().outcome {
        PlanOutcome::Planned(t) => *t,
        PlanOutcome::Infeasible(r) => panic!("fine plan should exist ({r})"),
    };
    assert!(trace.end_clock < 9.0, "short ticks finish the corridor sooner");

    let report = validate(&trace, &ctx, 10).unwrap();
    assert!(report.passed, "failures: {:?}", report.failures);
}

#[test]
fn a_trace_missing_a_recorded_event_does_not_replay() {
    let graph = line_graph(2, 3.0);
    let scenario = Scenario::build(&read_bundled("nav-domain.pddl"), &nav_problem(), &graph);
    let mut trace = planned(&graph, &scenario, SearchParams::default());
    assert!(!trace.fired.is_empty());
    trace.fired.remove(0);

    let ctx = scenario.ctx(SearchParams::default());
    let report = validate(&trace, &ctx, 10).unwrap();
    assert!(!report.passed);
    assert!(
        report.failures.iter().any(|f| f.contains("does not replay")),
        "failures: {:?}",
        report.failures
    );
}

#[test]
fn a_trace_missing_its_arrival_fails_the_goal_check() {
    let graph = line_graph(2, 3.0);
    let scenario = Scenario::build(&read_bundled("nav-domain.pddl"), &nav_problem(), &graph);
    let mut trace = planned(&graph, &scenario, SearchParams::default());
    let removed = trace.steps.pop().expect("plan has steps");
    assert!(removed.action.starts_with("reached"));

    let ctx = scenario.ctx(SearchParams::default());
    let report = validate(&trace, &ctx, 10).unwrap();
    assert!(!report.passed);
    assert!(
        report.failures.iter().any(|f| f.contains("goal not satisfied")),
        "failures: {:?}",
        report.failures
    );
}

#[test]
fn bad_validation_parameters_are_errors_not_failures() {
    let graph = line_graph(2, 3.0);
    let scenario = Scenario::build(&read_bundled("nav-domain.pddl"), &nav_problem(), &graph);
    let trace = planned(&graph, &scenario, SearchParams::default());

    let ctx = scenario.ctx(SearchParams::default());
    assert!(matches!(validate(&trace, &ctx, 1), Err(EngineError::BadParams(_))));

    let mismatched = scenario.ctx(SearchParams { delta: 0.5, ..SearchParams::default() });
    assert!(matches!(validate(&trace, &mismatched, 10), Err(EngineError::BadParams(_))));
}

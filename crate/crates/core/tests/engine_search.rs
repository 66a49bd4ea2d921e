//! Planner behavior: optimality against independent oracles, determinism,
//! infeasibility reporting, and cost-model invariants.

mod common;

use approx::assert_abs_diff_eq;
use common::*;
use navplan_core::engine::{
    plan, HybridState, InfeasibleReason, PlanOutcome, PlanTrace, SearchParams, SimContext,
};
use navplan_core::sampler::{Edge, Waypoint, WaypointGraph};
use navplan_core::world::Pose;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn nav_scenario(graph: &WaypointGraph) -> Scenario {
    Scenario::build(&read_bundled("nav-domain.pddl"), &nav_problem(), graph)
}

/// Exhaustive depth-first enumeration of every action/tick interleaving up
/// to the horizon; returns the cheapest goal-reaching cost, if any.
fn exhaustive_best_cost(ctx: &SimContext<'_>) -> Option<f64> {
    fn dfs(ctx: &SimContext<'_>, s: &HybridState, best: &mut Option<f64>) {
        if best.is_some_and(|b| s.g >= b - 1e-12) {
            return;
        }
        if ctx.goal_satisfied(s) {
            *best = Some(s.g);
            return;
        }
        if s.clock + ctx.params.delta <= ctx.params.horizon + 1e-9 {
            let mut next = ctx.tick(s).unwrap().state;
            next.g = s.g + ctx.step_cost(s, &next);
            dfs(ctx, &next, best);
        }
        for idx in 0..ctx.model.actions.len() {
            if ctx.action_applicable(s, idx) {
                let mut next = ctx.apply_action(s, idx).unwrap();
                next.g = s.g + ctx.step_cost(s, &next);
                dfs(ctx, &next, best);
            }
        }
    }
    let mut best = None;
    dfs(ctx, &ctx.initial_state(), &mut best);
    best
}

/// Test-local shortest path over the waypoint graph, O(n²) Dijkstra.
fn oracle_shortest_path(graph: &WaypointGraph) -> f64 {
    let n = graph.waypoints.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[graph.start_id] = 0.0;
    for _ in 0..n {
        let mut u = usize::MAX;
        for v in 0..n {
            if !done[v] && (u == usize::MAX || dist[v] < dist[u]) {
                u = v;
            }
        }
        if dist[u].is_infinite() {
            break;
        }
        done[u] = true;
        for e in &graph.edges {
            let (a, b) = (e.a, e.b);
            if a == u && dist[u] + e.length < dist[b] {
                dist[b] = dist[u] + e.length;
            }
            if b == u && dist[u] + e.length < dist[a] {
                dist[a] = dist[u] + e.length;
            }
        }
    }
    dist[graph.goal_id]
}

#[test]
fn already_at_goal_yields_an_empty_plan() {
    let graph = line_graph(1, 3.0);
    let scenario = nav_scenario(&graph);
    let ctx = scenario.ctx(SearchParams::default());
    let result = plan(&ctx, &graph).unwrap();
    let PlanOutcome::Planned(trace) = result.outcome else {
        panic!("expected a plan");
    };
    assert!(trace.steps.is_empty());
    assert_eq!(trace.cost, 0.0);
    assert_eq!(trace.end_clock, 0.0);
    assert_eq!(trace.ticks.len(), 1, "just the initial row");
    assert!(trace.fired.is_empty());
    assert_abs_diff_eq!(trace.final_trace, 0.03, epsilon = 1e-12);
}

#[test]
fn single_edge_plan_is_cost_optimal_and_fully_recorded() {
    let graph = line_graph(2, 3.0);
    let scenario = nav_scenario(&graph);
    let params = SearchParams { weight: 1.0, ..SearchParams::default() };
    let ctx = scenario.ctx(params.clone());
    let result = plan(&ctx, &graph).unwrap();
    let PlanOutcome::Planned(trace) = result.outcome else {
        panic!("expected a plan");
    };

    let names: Vec<(f64, &str)> =
        trace.steps.iter().map(|s| (s.time, s.action.as_str())).collect();
    assert_eq!(
        names,
        vec![(0.0, "goto_waypoint wp_start wp_goal"), (3.0, "reached wp_start wp_goal")]
    );
    assert_eq!(trace.end_clock, 3.0);
    assert_eq!(trace.ticks.len(), 4);
    let fired: Vec<(f64, &str)> =
        trace.fired.iter().map(|(t, n)| (*t, n.as_str())).collect();
    assert_eq!(
        fired,
        vec![(1.0, "belief_update"), (2.0, "belief_update"), (3.0, "belief_update")]
    );

    let oracle = exhaustive_best_cost(&ctx).expect("oracle finds the goal");
    assert_abs_diff_eq!(trace.cost, oracle, epsilon = 1e-9);
    assert!(trace.cost > 3.0, "translation plus accumulated uncertainty");
}

#[test]
fn plan_cost_matches_shortest_path_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for case in 0..50 {
        let n = rng.gen_range(2..=6usize);
        let mut waypoints = Vec::new();
        for i in 0..n {
            waypoints.push(Waypoint {
                id: i,
                pose: Pose::new(rng.gen_range(0.0..8.0), rng.gen_range(0.0..8.0), 0.0),
            });
        }
        let mut edges: Vec<Edge> = Vec::new();
        let add_edge = |edges: &mut Vec<Edge>, a: usize, b: usize| {
            if a == b
                || edges.iter().any(|e| (e.a, e.b) == (a, b) || (e.a, e.b) == (b, a))
            {
                return;
            }
            let length = waypoints[a].pose.distance_xy(&waypoints[b].pose);
            edges.push(Edge { a, b, length });
        };
        for i in 1..n {
            add_edge(&mut edges, i - 1, i);
        }
        for _ in 0..n {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            add_edge(&mut edges, a, b);
        }
        let graph = WaypointGraph { waypoints, edges, start_id: 0, goal_id: n - 1 };

        let scenario = nav_scenario(&graph);
        let params = SearchParams {
            weight: 1.0,
            beta: 0.0,
            horizon: 100.0,
            ..SearchParams::default()
        };
        let ctx = scenario.ctx(params);
        let result = plan(&ctx, &graph).unwrap();
        let PlanOutcome::Planned(trace) = result.outcome else {
            panic!("case {case}: expected a plan");
        };
        let oracle = oracle_shortest_path(&graph);
        assert_abs_diff_eq!(trace.cost, oracle, epsilon = 1e-9);
    }
}

#[test]
fn plan_cost_matches_exhaustive_optimum_on_tiny_graphs() {
    // A short path, a longer path, and a triangle with a tempting detour.
    let path3 = line_graph(3, 1.5);
    let path4 = line_graph(4, 1.5);
    let triangle = WaypointGraph {
        waypoints: vec![
            Waypoint { id: 0, pose: Pose::new(0.0, 0.0, 0.0) },
            Waypoint { id: 1, pose: Pose::new(4.0, 0.0, 0.0) },
            Waypoint { id: 2, pose: Pose::new(2.0, 1.5, 0.0) },
        ],
        edges: vec![
            Edge { a: 0, b: 1, length: 4.0 },
            Edge { a: 0, b: 2, length: 2.5 },
            Edge { a: 2, b: 1, length: 2.5 },
        ],
        start_id: 0,
        goal_id: 1,
    };

    for (name, graph) in
        [("path3", &path3), ("path4", &path4), ("triangle", &triangle)]
    {
        let scenario = nav_scenario(graph);
        let params =
            SearchParams { weight: 1.0, horizon: 8.0, ..SearchParams::default() };
        let ctx = scenario.ctx(params);
        let result = plan(&ctx, graph).unwrap();
        let PlanOutcome::Planned(trace) = result.outcome else {
            panic!("{name}: expected a plan");
        };
        let oracle = exhaustive_best_cost(&ctx)
            .unwrap_or_else(|| panic!("{name}: oracle found no plan"));
        assert_abs_diff_eq!(trace.cost, oracle, epsilon = 1e-9);
    }
}

#[test]
fn identical_inputs_produce_identical_traces() {
    let graph = line_graph(3, 3.0);
    let texts: Vec<String> = (0..2)
        .map(|_| {
            let scenario = nav_scenario(&graph);
            let ctx = scenario.ctx(SearchParams::default());
            let result = plan(&ctx, &graph).unwrap();
            let PlanOutcome::Planned(trace) = result.outcome else {
                panic!("expected a plan");
            };
            trace.to_text()
        })
        .collect();
    assert_eq!(texts[0], texts[1], "two fresh builds must agree byte for byte");

    let reparsed = PlanTrace::parse(&texts[0]).unwrap();
    assert_eq!(reparsed.to_text(), texts[0]);
}

#[test]
fn step_costs_never_decrease_accumulated_cost() {
    let graph = line_graph(3, 2.0);
    let scenario = nav_scenario(&graph);
    let ctx = scenario.ctx(SearchParams::default());
    let mut rng = ChaCha8Rng::seed_from_u64(9);

    for _ in 0..20 {
        let mut s = ctx.initial_state();
        let mut g = 0.0;
        for _ in 0..40 {
            let mut options: Vec<HybridState> = Vec::new();
            if s.clock + ctx.params.delta <= ctx.params.horizon + 1e-9 {
                options.push(ctx.tick(&s).unwrap().state);
            }
            for idx in 0..ctx.model.actions.len() {
                if ctx.action_applicable(&s, idx) {
                    options.push(ctx.apply_action(&s, idx).unwrap());
                }
            }
            if options.is_empty() {
                break;
            }
            let next = options[rng.gen_range(0..options.len())].clone();
            let cost = ctx.step_cost(&s, &next);
            assert!(cost >= 0.0, "negative step cost {cost}");
            g += cost;
            assert!(g >= s.g - 1e-12);
            s = next;
            s.g = g;
        }
    }
}

#[test]
fn unreachable_within_the_horizon_reports_horizon() {
    let graph = line_graph(2, 30.0);
    let scenario = nav_scenario(&graph);
    let ctx = scenario.ctx(SearchParams { horizon: 5.0, ..SearchParams::default() });
    let result = plan(&ctx, &graph).unwrap();
    let PlanOutcome::Infeasible(reason) = result.outcome else {
        panic!("expected infeasible");
    };
    assert_eq!(reason, InfeasibleReason::Horizon);
    assert_eq!(reason.to_string(), "horizon");
}

#[test]
fn expansion_budget_exhaustion_reports_exhausted() {
    let graph = line_graph(5, 3.0);
    let scenario = nav_scenario(&graph);
    let ctx = scenario.ctx(SearchParams { max_expanded: 5, ..SearchParams::default() });
    let result = plan(&ctx, &graph).unwrap();
    let PlanOutcome::Infeasible(reason) = result.outcome else {
        panic!("expected infeasible");
    };
    assert_eq!(reason, InfeasibleReason::Exhausted);
    assert_eq!(reason.to_string(), "exhausted");
    assert!(result.stats.states_explored <= 5);
}

#[test]
fn draining_battery_separates_feasible_from_infeasible() {
    let graph = line_graph(2, 6.0);
    let scenario = Scenario::build(
        &read_bundled("nav-battery-domain.pddl"),
        &battery_problem(),
        &graph,
    );
    let params = SearchParams { eta: Some(0.20), ..SearchParams::default() };

    let healthy = scenario.ctx_with_charge(params.clone(), Some(80.0));
    let result = plan(&healthy, &graph).unwrap();
    let PlanOutcome::Planned(trace) = result.outcome else {
        panic!("expected a plan at charge 80");
    };
    assert!(trace.final_trace < 0.20);
    assert!(trace.ticks.iter().all(|t| t.charge.unwrap() > 20.0));

    let weak = scenario.ctx_with_charge(params, Some(40.0));
    let result = plan(&weak, &graph).unwrap();
    assert!(
        matches!(result.outcome, PlanOutcome::Infeasible(_)),
        "charge 40 cannot cross a 6 m edge before the low-battery latch"
    );
}

#[test]
fn coarser_ticks_explore_no_more_states() {
    let graph = line_graph(3, 3.0);
    let scenario = nav_scenario(&graph);
    let mut explored = Vec::new();
    for delta in [0.5, 1.0] {
        let ctx = scenario.ctx(SearchParams { delta, ..SearchParams::default() });
        let result = plan(&ctx, &graph).unwrap();
        assert!(matches!(result.outcome, PlanOutcome::Planned(_)));
        explored.push(result.stats.states_explored);
    }
    assert!(
        explored[1] <= explored[0],
        "coarser tick {} vs finer {}",
        explored[1],
        explored[0]
    );
}

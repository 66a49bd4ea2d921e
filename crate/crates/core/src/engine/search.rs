//! Weighted A* over hybrid states: successors are one tick forward or one
//! applicable instantaneous action, the heuristic is the graph distance to
//! the goal waypoint, and duplicate beliefs are folded through quantized
//! state keys.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::time::Instant;

use crate::sampler::WaypointGraph;

use super::sim::SimContext;
use super::state::{HybridState, StateKey};
use super::trace::{PlanStep, PlanTrace, TickLog};
use super::EngineError;

/// Search effort counters.
#[derive(Debug, Clone, Default)]
pub struct SearchStats {
    /// States popped and expanded.
    pub states_explored: u64,
    /// Successor states enqueued.
    pub states_generated: u64,
    /// Wall-clock seconds spent in `plan`.
    pub planning_time: f64,
    /// Largest open-list size observed.
    pub peak_open_list: u64,
}

/// Why no plan came back.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfeasibleReason {
    /// The reachable space (or the memory bound) ran out with no goal state.
    Exhausted,
    /// Every remaining frontier state was cut off by the temporal horizon.
    Horizon,
}

impl std::fmt::Display for InfeasibleReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InfeasibleReason::Exhausted => write!(f, "exhausted"),
            InfeasibleReason::Horizon => write!(f, "horizon"),
        }
    }
}

#[derive(Debug)]
pub enum PlanOutcome {
    Planned(Box<PlanTrace>),
    Infeasible(InfeasibleReason),
}

#[derive(Debug)]
pub struct PlanResult {
    pub outcome: PlanOutcome,
    pub stats: SearchStats,
}

/// How a node was produced from its parent.
#[derive(Clone, Copy)]
enum Step {
    Root,
    Tick,
    Action(usize),
}

/// Expanded node: just enough to rebuild the step sequence. The state itself
/// is dropped at expansion time and recomputed by replay when a plan is
/// reconstructed, keeping memory proportional to the frontier rather than to
/// everything ever expanded.
struct Node {
    parent: usize,
    step: Step,
}

/// Open-list entry; ordered as a min-heap on (f, key digest, insertion seq)
/// so ties break identically on every run. Owns its state until popped.
struct Entry {
    f: f64,
    tie: u128,
    seq: u64,
    parent: usize,
    step: Step,
    state: HybridState,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap, we want the smallest f first
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.tie.cmp(&self.tie))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Literal-indexed heuristic contributions.
enum HKind {
    None,
    /// Resting at a waypoint with this graph distance to the goal.
    At(f64),
    /// Traversing an edge: remaining distance lives in this fluent slot,
    /// plus the graph distance from the edge's target.
    Moving { d_slot: usize, to_goal: f64 },
}

struct Heuristic {
    alpha: f64,
    kinds: Vec<HKind>,
}

impl Heuristic {
    /// Graph shortest-path distance from every waypoint to the goal.
    fn distances_to_goal(graph: &WaypointGraph) -> Vec<f64> {
        let adj = graph.adjacency();
        let mut dist = vec![f64::INFINITY; graph.waypoints.len()];
        let mut heap: BinaryHeap<(std::cmp::Reverse<u64>, usize)> = BinaryHeap::new();
        dist[graph.goal_id] = 0.0;
        heap.push((std::cmp::Reverse(0), graph.goal_id));
        while let Some((std::cmp::Reverse(bits), u)) = heap.pop() {
            let du = f64::from_bits(bits);
            if du > dist[u] {
                continue;
            }
            for &(v, len) in &adj[u] {
                let alt = du + len;
                if alt < dist[v] {
                    dist[v] = alt;
                    heap.push((std::cmp::Reverse(alt.to_bits()), v));
                }
            }
        }
        dist
    }

    fn build(ctx: &SimContext<'_>, graph: &WaypointGraph) -> Heuristic {
        let dist = Self::distances_to_goal(graph);
        let model = ctx.model;
        let kinds = model
            .literal_names
            .iter()
            .map(|name| {
                let parts: Vec<&str> = name.split_whitespace().collect();
                match parts.as_slice() {
                    ["robot_at", wp] => match model.waypoint_of_object.get(*wp) {
                        Some(&id) => HKind::At(dist[id]),
                        None => HKind::None,
                    },
                    ["moving", from, to] => {
                        let slot = model.fluent_id(&format!("d {from} {to}"));
                        let id = model.waypoint_of_object.get(*to);
                        match (slot, id) {
                            (Some(d_slot), Some(&id)) => {
                                HKind::Moving { d_slot, to_goal: dist[id] }
                            }
                            _ => HKind::None,
                        }
                    }
                    _ => HKind::None,
                }
            })
            .collect();
        Heuristic { alpha: ctx.params.alpha, kinds }
    }

    /// Remaining-distance estimate; zero when the state carries no position
    /// literal (non-navigation models).
    fn of(&self, s: &HybridState) -> f64 {
        let mut resting: Option<f64> = None;
        for lit in s.literals.iter_ones() {
            match self.kinds[lit] {
                HKind::Moving { d_slot, to_goal } => {
                    return self.alpha * (s.fluents[d_slot].max(0.0) + to_goal);
                }
                HKind::At(d) => resting = Some(d),
                HKind::None => {}
            }
        }
        self.alpha * resting.unwrap_or(0.0)
    }
}

/// Margin for floating-point comparisons of accumulated costs.
const G_EPS: f64 = 1e-12;

/// Per-fluent-slot gating literal for the closed-set key: remaining-distance
/// fluents are identified with the traversal literal that guards every read
/// of them, so spent values left behind by finished traversals do not
/// manufacture artificial state identities.
fn key_gate(ctx: &SimContext<'_>) -> Vec<Option<usize>> {
    ctx.model
        .fluent_names
        .iter()
        .map(|name| {
            let parts: Vec<&str> = name.split_whitespace().collect();
            match parts.as_slice() {
                ["d", from, to] => ctx.model.literal_id(&format!("moving {from} {to}")),
                _ => None,
            }
        })
        .collect()
}

/// Weighted A* from the initial state of `ctx` to its goal.
///
/// Deterministic for identical inputs: the open list breaks f-ties on the
/// quantized state-key hash and then on insertion order. Returns the first
/// goal-satisfying state popped, or the infeasibility reason: `Horizon` when
/// the frontier died out only because of the temporal bound, `Exhausted`
/// when the reachable space or the expansion budget ran out.
pub fn plan(ctx: &SimContext<'_>, graph: &WaypointGraph) -> Result<PlanResult, EngineError> {
    ctx.params.validate()?;
    let started = Instant::now();
    let mut stats = SearchStats::default();
    let heuristic = Heuristic::build(ctx, graph);
    let gate = key_gate(ctx);

    let init = ctx.initial_state();
    let init_digest = StateKey::of_gated(&init, &gate).digest();

    let mut arena: Vec<Node> = Vec::new();
    let mut open: BinaryHeap<Entry> = BinaryHeap::new();
    let mut best: HashMap<u128, f64> = HashMap::new();

    let f0 = ctx.params.weight * heuristic.of(&init);
    best.insert(init_digest, 0.0);
    open.push(Entry {
        f: f0,
        tie: init_digest,
        seq: 0,
        parent: usize::MAX,
        step: Step::Root,
        state: init,
    });
    let mut seq: u64 = 1;
    stats.states_generated = 1;
    stats.peak_open_list = 1;

    let mut saw_horizon_cut = false;
    let mut outcome: Option<PlanOutcome> = None;

    while let Some(entry) = open.pop() {
        let state = entry.state;
        if best.get(&entry.tie).is_some_and(|&bg| state.g > bg + G_EPS) {
            continue; // superseded by a cheaper copy
        }
        if ctx.goal_satisfied(&state) {
            outcome = Some(PlanOutcome::Planned(Box::new(reconstruct(
                ctx,
                &arena,
                entry.parent,
                entry.step,
                &state,
                &stats,
            )?)));
            break;
        }
        if stats.states_explored >= ctx.params.max_expanded as u64 {
            outcome = Some(PlanOutcome::Infeasible(InfeasibleReason::Exhausted));
            break;
        }
        stats.states_explored += 1;
        arena.push(Node { parent: entry.parent, step: entry.step });
        let me = arena.len() - 1;

        let mut successors: Vec<(HybridState, Step)> = Vec::new();
        if state.clock + ctx.params.delta <= ctx.params.horizon + 1e-9 {
            successors.push((ctx.tick(&state)?.state, Step::Tick));
        } else {
            saw_horizon_cut = true;
        }
        for idx in 0..ctx.model.actions.len() {
            if ctx.action_applicable(&state, idx) {
                successors.push((ctx.apply_action(&state, idx)?, Step::Action(idx)));
            }
        }

        for (mut succ, step) in successors {
            succ.g = state.g + ctx.step_cost(&state, &succ);
            let digest = StateKey::of_gated(&succ, &gate).digest();
            if best.get(&digest).is_some_and(|&bg| bg <= succ.g + G_EPS) {
                continue;
            }
            best.insert(digest, succ.g);
            let f = succ.g + ctx.params.weight * heuristic.of(&succ);
            open.push(Entry { f, tie: digest, seq, parent: me, step, state: succ });
            seq += 1;
            stats.states_generated += 1;
            stats.peak_open_list = stats.peak_open_list.max(open.len() as u64);
        }
    }

    let outcome = outcome.unwrap_or(PlanOutcome::Infeasible(if saw_horizon_cut {
        InfeasibleReason::Horizon
    } else {
        InfeasibleReason::Exhausted
    }));
    stats.planning_time = started.elapsed().as_secs_f64();
    if let PlanOutcome::Planned(trace) = &outcome {
        debug_assert!(trace.steps.windows(2).all(|w| w[0].time <= w[1].time));
    }
    let mut result = PlanResult { outcome, stats };
    if let PlanOutcome::Planned(trace) = &mut result.outcome {
        trace.stats = result.stats.clone();
    }
    Ok(result)
}

/// Walk the parent chain of the goal entry back to the root, then replay the
/// recorded steps from the initial state to recover the per-tick log and the
/// event firings (expansion discards intermediate states; the replay is
/// deterministic, so it lands exactly where the search did).
fn reconstruct(
    ctx: &SimContext<'_>,
    arena: &[Node],
    goal_parent: usize,
    goal_step: Step,
    goal_state: &HybridState,
    stats: &SearchStats,
) -> Result<PlanTrace, EngineError> {
    let mut chain = vec![goal_step];
    let mut at = goal_parent;
    while at != usize::MAX {
        chain.push(arena[at].step);
        at = arena[at].parent;
    }
    chain.reverse();

    let tick_log = |state: &HybridState| TickLog {
        clock: state.clock,
        mean: state.belief.mean,
        trace: state.trace(),
        charge: ctx.charge_slot().map(|slot| state.fluents[slot]),
    };

    let mut state = ctx.initial_state();
    let mut steps = Vec::new();
    let mut ticks = Vec::new();
    let mut fired = Vec::new();
    for step in chain {
        match step {
            Step::Root => ticks.push(tick_log(&state)),
            Step::Tick => {
                let ticked = ctx.tick(&state)?;
                state = ticked.state;
                ticks.push(tick_log(&state));
                for name in ticked.fired {
                    fired.push((state.clock, name));
                }
            }
            Step::Action(idx) => {
                steps.push(PlanStep {
                    time: state.clock,
                    action: ctx.model.actions[idx].display.clone(),
                });
                state = ctx.apply_action(&state, idx)?;
            }
        }
    }
    debug_assert_eq!(state.clock, goal_state.clock);

    Ok(PlanTrace {
        delta: ctx.params.delta,
        end_clock: goal_state.clock,
        steps,
        ticks,
        fired,
        cost: goal_state.g,
        final_trace: goal_state.trace(),
        stats: stats.clone(),
        config_tag: None,
    })
}

//! Plan ratification against a finer time discretization.
//!
//! A plan found at tick length Δ is replayed twice: once at Δ (the plan must
//! reproduce its own recorded event sequence and reach the goal) and once at
//! Δ/refinement with per-tick motion noise rescaled. The fine replay must
//! keep bounded fluents in range between coarse ticks, fire the same
//! state-changing events in the same order, and still reach the goal. The
//! report also carries the largest divergence of the belief-covariance trace
//! between the two simulations at coarse tick boundaries.

use super::sim::SimContext;
use super::state::HybridState;
use super::trace::PlanTrace;
use super::EngineError;
use crate::pddlplus::ground::GroundEffect;

/// Outcome of ratifying one plan; `passed` is simply `failures.is_empty()`.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub passed: bool,
    pub refinement: u32,
    pub max_trace_divergence: f64,
    pub failures: Vec<String>,
    pub config_tag: Option<String>,
}

impl ValidationReport {
    /// Canonical text form, one field per line, deterministic for identical
    /// inputs.
    pub fn to_text(&self) -> String {
        let mut out = String::from("validation-report 1\n");
        if let Some(tag) = &self.config_tag {
            out.push_str(&format!("config {tag}\n"));
        }
        out.push_str(&format!(
            "result {}\n",
            if self.passed { "pass" } else { "fail" }
        ));
        out.push_str(&format!("refinement {}\n", self.refinement));
        out.push_str(&format!("max-trace-divergence {}\n", self.max_trace_divergence));
        for f in &self.failures {
            out.push_str(&format!("failure {f}\n"));
        }
        out
    }
}

/// Tolerance for matching recorded times to tick boundaries.
const TIME_EPS: f64 = 1e-6;
/// Slack for fluent lower-bound checks.
const BOUND_EPS: f64 = 1e-9;

/// One replay's artifacts: fired events, covariance trace at coarse
/// boundaries, and the final state (absent when the replay broke down).
struct Replay {
    fired: Vec<(f64, String)>,
    boundary_traces: Vec<f64>,
    final_state: Option<HybridState>,
    failures: Vec<String>,
}

/// Re-simulate `trace`'s actions in `ctx`, ticking `per_boundary` fine ticks
/// between consecutive coarse boundaries (1 for the coarse replay itself).
/// When `check_bounds` carries the permitted remaining-distance overshoot,
/// distance fluents and the battery fluent are bounds-checked after every
/// tick. `pre_eps` is the numeric slack for scheduled action preconditions:
/// zero for the coarse replay (which must reproduce the plan exactly),
/// a few ulps for the refined one.
fn replay(
    ctx: &SimContext<'_>,
    trace: &PlanTrace,
    boundaries: usize,
    per_boundary: usize,
    check_bounds: Option<f64>,
    pre_eps: f64,
    label: &str,
) -> Replay {
    let mut out = Replay {
        fired: Vec::new(),
        boundary_traces: Vec::new(),
        final_state: None,
        failures: Vec::new(),
    };
    let delta = ctx.params.delta;
    let total_ticks = boundaries * per_boundary;

    // Actions grouped by the fine tick index they execute after.
    let mut step_at: Vec<Vec<&str>> = vec![Vec::new(); total_ticks + 1];
    for step in &trace.steps {
        let idx = (step.time / delta).round();
        if (idx * delta - step.time).abs() > TIME_EPS || idx < 0.0 || idx > total_ticks as f64 {
            out.failures.push(format!(
                "action '{}' at t={} is not on a tick boundary of the {label} replay",
                step.action, step.time
            ));
            return out;
        }
        step_at[idx as usize].push(&step.action);
    }

    let d_slots: Vec<usize> = ctx
        .model
        .fluent_names
        .iter()
        .enumerate()
        .filter(|(_, n)| n.starts_with("d "))
        .map(|(i, _)| i)
        .collect();

    let mut state = ctx.initial_state();
    out.boundary_traces.push(state.trace());
    for k in 0..=total_ticks {
        for name in &step_at[k] {
            let Some(idx) = ctx.model.actions.iter().position(|a| a.display == *name) else {
                out.failures.push(format!("unknown action '{name}' in plan"));
                return out;
            };
            if !ctx.action_applicable_eps(&state, idx, pre_eps) {
                out.failures.push(format!(
                    "action '{name}' not applicable at t={} in the {label} replay",
                    state.clock
                ));
                return out;
            }
            match ctx.apply_action_eps(&state, idx, pre_eps) {
                Ok(next) => state = next,
                Err(e) => {
                    out.failures.push(format!("{label} replay error: {e}"));
                    return out;
                }
            }
        }
        if k == total_ticks {
            break;
        }
        match ctx.tick(&state) {
            Ok(ticked) => {
                state = ticked.state;
                for name in ticked.fired {
                    out.fired.push((state.clock, name));
                }
            }
            Err(e) => {
                out.failures.push(format!("{label} replay error: {e}"));
                return out;
            }
        }
        if let Some(d_floor) = check_bounds {
            if let Some(slot) = ctx.charge_slot() {
                if state.fluents[slot] < -BOUND_EPS {
                    out.failures.push(format!(
                        "charge dropped to {} at t={} in the {label} replay",
                        state.fluents[slot], state.clock
                    ));
                    return out;
                }
            }
            for &slot in &d_slots {
                if state.fluents[slot] < -d_floor - BOUND_EPS {
                    out.failures.push(format!(
                        "fluent '{}' dropped to {} at t={} in the {label} replay",
                        ctx.model.fluent_names[slot], state.fluents[slot], state.clock
                    ));
                    return out;
                }
            }
        }
        if (k + 1) % per_boundary == 0 {
            out.boundary_traces.push(state.trace());
        }
    }
    out.final_state = Some(state);
    out
}

/// Display names of events whose effects flip literals — the events whose
/// firing pattern must survive a change of tick length. Events that only
/// refresh numeric fluents (the per-tick measurement-update bookkeeping)
/// legitimately fire once per tick at any discretization.
fn literal_changing_events(ctx: &SimContext<'_>) -> Vec<String> {
    ctx.model
        .events
        .iter()
        .filter(|e| {
            e.effects
                .iter()
                .any(|eff| matches!(eff, GroundEffect::Add(_) | GroundEffect::Del(_)))
        })
        .map(|e| e.display.clone())
        .collect()
}

/// Ratify `trace` against `ctx` at a `refinement`-times finer tick length.
///
/// Requires `refinement >= 2` and `ctx.params.delta == trace.delta`. All
/// semantic problems are reported as failure lines, never as errors.
pub fn validate(
    trace: &PlanTrace,
    ctx: &SimContext<'_>,
    refinement: u32,
) -> Result<ValidationReport, EngineError> {
    if refinement < 2 {
        return Err(EngineError::BadParams(format!(
            "refinement must be at least 2, got {refinement}"
        )));
    }
    if (ctx.params.delta - trace.delta).abs() > 1e-12 {
        return Err(EngineError::BadParams(format!(
            "plan tick length {} does not match configured tick length {}",
            trace.delta, ctx.params.delta
        )));
    }

    let mut report = ValidationReport {
        passed: false,
        refinement,
        max_trace_divergence: 0.0,
        failures: Vec::new(),
        config_tag: trace.config_tag.clone(),
    };

    let boundaries_f = trace.end_clock / trace.delta;
    let boundaries = boundaries_f.round();
    if (boundaries - boundaries_f).abs() > TIME_EPS || boundaries < 0.0 {
        report
            .failures
            .push(format!(
                "end clock {} is not a whole number of ticks of length {}",
                trace.end_clock, trace.delta
            ));
        return Ok(report);
    }
    let boundaries = boundaries as usize;

    // Coarse replay: the plan must reproduce its own record exactly.
    let coarse = replay(ctx, trace, boundaries, 1, None, 0.0, "coarse");
    report.failures.extend(coarse.failures.iter().cloned());
    if coarse.failures.is_empty() {
        if coarse.fired.len() != trace.fired.len() {
            report.failures.push(format!(
                "plan does not replay: it records {} event firings but the coarse replay produced {}",
                trace.fired.len(),
                coarse.fired.len()
            ));
        } else {
            for ((tc, nc), (tp, np)) in coarse.fired.iter().zip(&trace.fired) {
                if nc != np || (tc - tp).abs() > TIME_EPS {
                    report.failures.push(format!(
                        "plan does not replay: recorded event '{np}' at t={tp}, coarse replay fired '{nc}' at t={tc}"
                    ));
                    break;
                }
            }
        }
        if let Some(final_state) = &coarse.final_state {
            if !ctx.goal_satisfied(final_state) {
                report
                    .failures
                    .push(format!(
                        "goal not satisfied at the end of the coarse replay (t={})",
                        final_state.clock
                    ));
            }
        }
    }

    // Fine replay: same actions, refinement× shorter ticks, bounds enforced
    // between coarse boundaries.
    let fine_ctx = ctx.refined(refinement);
    let d_floor = ctx.params.delta * ctx.params.d_factor;
    let fine = replay(
        &fine_ctx,
        trace,
        boundaries,
        refinement as usize,
        Some(d_floor),
        BOUND_EPS,
        "refined",
    );
    report.failures.extend(fine.failures.iter().cloned());

    let lc: Vec<String> = literal_changing_events(ctx);
    let filter = |fired: &[(f64, String)]| -> Vec<(f64, String)> {
        fired
            .iter()
            .filter(|(_, n)| lc.contains(n))
            .cloned()
            .collect()
    };
    let coarse_lc = filter(&coarse.fired);
    let fine_lc = filter(&fine.fired);
    for i in 0..coarse_lc.len().max(fine_lc.len()) {
        match (coarse_lc.get(i), fine_lc.get(i)) {
            (Some((tc, nc)), Some((_, nf))) if nc != nf => {
                report.failures.push(format!(
                    "event order diverges under refinement {refinement}: plan fires '{nc}' at t={tc} where the refined simulation fires '{nf}'"
                ));
                break;
            }
            (Some((tc, nc)), None) => {
                report.failures.push(format!(
                    "event '{nc}' fires in the plan at t={tc} but never under refinement {refinement}"
                ));
                break;
            }
            (None, Some((tf, nf))) => {
                report.failures.push(format!(
                    "event '{nf}' fires under refinement {refinement} at t={tf} but not in the plan"
                ));
                break;
            }
            _ => {}
        }
    }

    if fine.failures.is_empty() {
        if let Some(final_state) = &fine.final_state {
            if !fine_ctx.goal_satisfied(final_state) {
                report.failures.push(format!(
                    "goal not satisfied at the end of the refined replay (t={})",
                    final_state.clock
                ));
            }
        }
    }

    report.max_trace_divergence = coarse
        .boundary_traces
        .iter()
        .zip(&fine.boundary_traces)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    report.passed = report.failures.is_empty();
    Ok(report)
}

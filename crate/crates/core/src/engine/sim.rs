//! Tick-by-tick execution of a grounded model: explicit-Euler process
//! integration, event firing to fixpoint, instantaneous action application,
//! and the per-step cost the search accumulates.

use crate::belief::{trace_of, BeliefConfig, GaussianBelief};
use crate::pddlplus::{AttachmentCall, GroundedModel};
use crate::pddlplus::ground::{GroundCondition, GroundEffect};
use crate::world::WorldModel;

use super::state::{BitSet, HybridState};
use super::{EngineError, SearchParams};

/// Fluent name the engine overrides with the configured motion factor.
pub const DFACTOR_FLUENT: &str = "dfactor";
/// Fluent name that mirrors the belief covariance trace.
pub const TRACE_FLUENT: &str = "trace_sigma";
/// Fluent name of the battery level, when the domain has one.
pub const CHARGE_FLUENT: &str = "charge";

/// Maximum event firings within a single tick before the engine declares the
/// domain malformed. The counter idiom needs three; anything near the bound
/// is a cycle.
pub const EVENT_FIRING_BOUND: usize = 100;

/// A tick's result: the advanced state and the events that fired, in order.
#[derive(Debug, Clone)]
pub struct TickOutcome {
    pub state: HybridState,
    pub fired: Vec<String>,
}

/// Immutable execution context: the grounded model, the environment, the
/// discretization parameters, and the patched static-value table.
///
/// Static-fluent overrides applied at construction: `dfactor` is forced to
/// `params.d_factor` (the per-tick translation is engine semantics, not
/// problem data). In the initial state, `trace_sigma` is seeded from the
/// initial belief and `charge` from `initial_charge` when given, whatever
/// the problem file says — the scenario configuration is authoritative.
#[derive(Debug, Clone)]
pub struct SimContext<'a> {
    pub model: &'a GroundedModel,
    pub world: &'a WorldModel,
    pub params: SearchParams,
    pub belief_cfg: BeliefConfig,
    pub(crate) statics: Vec<f64>,
    pub(crate) initial_belief: GaussianBelief,
    pub(crate) initial_charge: Option<f64>,
    pub(crate) trace_slot: Option<usize>,
    pub(crate) charge_slot: Option<usize>,
}

impl<'a> SimContext<'a> {
    pub fn new(
        model: &'a GroundedModel,
        world: &'a WorldModel,
        params: SearchParams,
        belief_cfg: BeliefConfig,
        initial_belief: GaussianBelief,
        initial_charge: Option<f64>,
    ) -> Result<SimContext<'a>, EngineError> {
        params.validate()?;
        initial_belief.validate()?;
        let mut statics = model.static_values.clone();
        if let Some(i) = model.static_id(DFACTOR_FLUENT) {
            statics[i] = params.d_factor;
        }
        Ok(SimContext {
            trace_slot: model.fluent_id(TRACE_FLUENT),
            charge_slot: model.fluent_id(CHARGE_FLUENT),
            model,
            world,
            params,
            belief_cfg,
            statics,
            initial_belief,
            initial_charge,
        })
    }

    /// The same scenario at `refinement`-times finer ticks, with per-tick
    /// motion noise scaled down so total process noise per unit time is
    /// preserved.
    pub fn refined(&self, refinement: u32) -> SimContext<'a> {
        let mut out = self.clone();
        out.params.delta /= refinement as f64;
        out.belief_cfg.motion_noise = self.belief_cfg.motion_noise.scaled(1.0 / refinement as f64);
        out
    }

    pub fn statics(&self) -> &[f64] {
        &self.statics
    }

    pub fn charge_slot(&self) -> Option<usize> {
        self.charge_slot
    }

    /// State at clock zero: initial literals and fluents from the model,
    /// with the engine-owned fluents patched in.
    pub fn initial_state(&self) -> HybridState {
        let mut literals = BitSet::new(self.model.literal_names.len());
        for &l in &self.model.init_literals {
            literals.set(l, true);
        }
        let mut fluents = self.model.init_fluents.clone();
        if let Some(slot) = self.trace_slot {
            fluents[slot] = trace_of(&self.initial_belief);
        }
        if let (Some(slot), Some(charge)) = (self.charge_slot, self.initial_charge) {
            fluents[slot] = charge;
        }
        HybridState {
            literals,
            fluents,
            belief: self.initial_belief.clone(),
            clock: 0.0,
            g: 0.0,
        }
    }

    fn holds_all(&self, conds: &[GroundCondition], s: &HybridState) -> bool {
        let lits = &s.literals;
        conds.iter().all(|c| c.holds(&|i| lits.get(i), &s.fluents, &self.statics))
    }

    /// Whether the model goal (plus the optional trace bound) holds.
    pub fn goal_satisfied(&self, s: &HybridState) -> bool {
        self.holds_all(&self.model.goal, s)
            && self.params.eta.is_none_or(|eta| s.trace() < eta)
    }

    /// Apply instantaneous effects; right-hand sides all read the fluent
    /// vector as it was before this batch.
    fn apply_effects(&self, effects: &[GroundEffect], s: &mut HybridState) {
        let snapshot = s.fluents.clone();
        for e in effects {
            match e {
                GroundEffect::Add(l) => s.literals.set(*l, true),
                GroundEffect::Del(l) => s.literals.set(*l, false),
                GroundEffect::Assign { slot, value } => {
                    s.fluents[*slot] = value.eval(&snapshot, &self.statics)
                }
                GroundEffect::Increase { slot, value } => {
                    s.fluents[*slot] += value.eval(&snapshot, &self.statics)
                }
                GroundEffect::Decrease { slot, value } => {
                    s.fluents[*slot] -= value.eval(&snapshot, &self.statics)
                }
            }
        }
    }

    fn fire_event(&self, idx: usize, s: &mut HybridState, tick_index: u64) -> Result<(), EngineError> {
        let ev = &self.model.events[idx];
        self.apply_effects(&ev.effects, s);
        if let Some(att) = &ev.attachment {
            let outcome = {
                let lits = &s.literals;
                let call = AttachmentCall {
                    fluents: &s.fluents,
                    statics: &self.statics,
                    literal_true: &|i| lits.get(i),
                    belief: &s.belief,
                    model: self.model,
                    map: &self.world.map,
                    landmarks: &self.world.landmarks,
                    belief_cfg: &self.belief_cfg,
                    delta: self.params.delta,
                    d_factor: self.params.d_factor,
                    tick_index,
                };
                (att.func)(&call).map_err(|msg| EngineError::Attachment {
                    name: att.name.clone(),
                    msg,
                })?
            };
            if outcome.values.len() != att.targets.len() {
                return Err(EngineError::Attachment {
                    name: att.name.clone(),
                    msg: format!(
                        "returned {} values for {} declared targets",
                        outcome.values.len(),
                        att.targets.len()
                    ),
                });
            }
            s.belief = outcome.belief;
            for (&slot, &v) in att.targets.iter().zip(&outcome.values) {
                s.fluents[slot] = v;
            }
        }
        Ok(())
    }

    /// Advance one tick: integrate every process enabled at the tick start
    /// over `delta` (explicit Euler with start-of-tick rates), then fire
    /// enabled events to fixpoint in declaration order.
    pub fn tick(&self, s: &HybridState) -> Result<TickOutcome, EngineError> {
        let mut next = s.clone();
        let mut deltas: Vec<(usize, f64)> = Vec::new();
        for p in &self.model.processes {
            if self.holds_all(&p.pre, s) {
                for r in &p.rates {
                    let amount = r.rate.eval(&s.fluents, &self.statics) * self.params.delta;
                    deltas.push((r.slot, if r.increase { amount } else { -amount }));
                }
            }
        }
        for (slot, d) in deltas {
            next.fluents[slot] += d;
        }
        next.clock = s.clock + self.params.delta;
        let tick_index = (next.clock / self.params.delta).round() as u64;

        let mut fired = Vec::new();
        loop {
            let enabled = (0..self.model.events.len())
                .find(|&i| self.holds_all(&self.model.events[i].pre, &next));
            let Some(idx) = enabled else { break };
            if fired.len() >= EVENT_FIRING_BOUND {
                return Err(EngineError::EventLoop {
                    clock: next.clock,
                    bound: EVENT_FIRING_BOUND,
                });
            }
            self.fire_event(idx, &mut next, tick_index)?;
            fired.push(self.model.events[idx].display.clone());
        }
        self.check_finite(&next)?;
        Ok(TickOutcome { state: next, fired })
    }

    pub fn action_applicable(&self, s: &HybridState, idx: usize) -> bool {
        self.holds_all(&self.model.actions[idx].pre, s)
    }

    /// Precondition check with `eps` slack on numeric comparisons. The plan
    /// validator replays coarse-tick schedules under finer ticks, where
    /// integration round-off shifts fluents by a few ulps around thresholds
    /// that the coarse run hit exactly.
    pub fn action_applicable_eps(&self, s: &HybridState, idx: usize, eps: f64) -> bool {
        let lits = &s.literals;
        self.model.actions[idx]
            .pre
            .iter()
            .all(|c| c.holds_eps(&|i| lits.get(i), &s.fluents, &self.statics, eps))
    }

    /// Apply one grounded action instantaneously (no clock movement).
    pub fn apply_action(&self, s: &HybridState, idx: usize) -> Result<HybridState, EngineError> {
        self.apply_action_eps(s, idx, 0.0)
    }

    /// [`SimContext::apply_action`] with precondition slack `eps`.
    pub fn apply_action_eps(
        &self,
        s: &HybridState,
        idx: usize,
        eps: f64,
    ) -> Result<HybridState, EngineError> {
        let a = &self.model.actions[idx];
        if !self.action_applicable_eps(s, idx, eps) {
            return Err(EngineError::Precondition { action: a.display.clone() });
        }
        let mut next = s.clone();
        self.apply_effects(&a.effects, &mut next);
        self.check_finite(&next)?;
        Ok(next)
    }

    /// Incremental plan cost of reaching `next` from `prev`: weighted mean
    /// translation plus weighted uncertainty accumulated over the elapsed
    /// time. Instantaneous actions therefore cost nothing.
    pub fn step_cost(&self, prev: &HybridState, next: &HybridState) -> f64 {
        let dx = next.belief.mean.x - prev.belief.mean.x;
        let dy = next.belief.mean.y - prev.belief.mean.y;
        self.params.alpha * dx.hypot(dy)
            + self.params.beta * next.trace() * (next.clock - prev.clock)
    }

    fn check_finite(&self, s: &HybridState) -> Result<(), EngineError> {
        for (i, v) in s.fluents.iter().enumerate() {
            if !v.is_finite() {
                return Err(EngineError::NonFinite {
                    what: format!("fluent '{}'", self.model.fluent_names[i]),
                    clock: s.clock,
                });
            }
        }
        let b = &s.belief;
        let mean_ok = b.mean.x.is_finite() && b.mean.y.is_finite() && b.mean.theta.is_finite();
        if !mean_ok || b.cov.iter().any(|v| !v.is_finite()) {
            return Err(EngineError::NonFinite { what: "belief".into(), clock: s.clock });
        }
        Ok(())
    }
}

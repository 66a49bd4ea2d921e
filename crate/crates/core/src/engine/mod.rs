//! Discretized hybrid forward search over grounded models.
//!
//! The planner advances a [`HybridState`] in uniform ticks of `delta`
//! seconds: every active process integrates its continuous effects one
//! explicit-Euler step, then enabled events fire to fixpoint in declaration
//! order — including the `belief_update` event, whose semantic attachment
//! propagates the Gaussian belief and writes its covariance trace back into
//! the fluent vector. Instantaneous actions are chosen by a weighted-A*
//! search between ticks. Accepted plans are re-simulated at a finer tick by
//! [`validate`], which is how coarse discretizations that gloss over a
//! triggered event get caught.

mod attachments;
mod search;
mod sim;
mod state;
mod trace;
mod validate;

pub use attachments::{belief_update_attachment, standard_registry, BELIEF_UPDATE};
pub use search::{plan, InfeasibleReason, PlanOutcome, PlanResult, SearchStats};
pub use sim::{SimContext, TickOutcome};
pub use state::{BitSet, HybridState, StateKey};
pub use trace::{write_ticks_csv, PlanStep, PlanTrace, TickLog};
pub use validate::{validate, ValidationReport};

use thiserror::Error;

use crate::belief::BeliefError;

/// Everything that can go wrong while simulating or searching. Infeasible
/// search outcomes are *not* errors; they are reported through
/// [`PlanOutcome`].
#[derive(Debug, Error)]
pub enum EngineError {
    /// Events kept re-enabling each other past the per-tick firing bound.
    #[error("event loop: events still enabled after {bound} firings at clock {clock}")]
    EventLoop { clock: f64, bound: usize },
    #[error("action '{action}' applied with unsatisfied precondition")]
    Precondition { action: String },
    #[error("attachment '{name}' failed: {msg}")]
    Attachment { name: String, msg: String },
    #[error("non-finite value in {what} at clock {clock}")]
    NonFinite { what: String, clock: f64 },
    #[error("belief error: {0}")]
    Belief(#[from] BeliefError),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("malformed plan trace: {0}")]
    TraceParse(String),
}

/// Knobs of the discretized search.
#[derive(Debug, Clone)]
pub struct SearchParams {
    /// Tick length in seconds.
    pub delta: f64,
    /// Motion discretization factor: nominal per-tick translation is
    /// `delta * d_factor` (an integer number of unit speeds).
    pub d_factor: f64,
    /// Temporal horizon in seconds; no state is expanded past it.
    pub horizon: f64,
    /// Weighted-A* weight, `f = g + weight * h`, must be >= 1.
    pub weight: f64,
    /// Cost weight on distance traveled per step.
    pub alpha: f64,
    /// Cost weight on accumulated uncertainty (trace * elapsed time).
    pub beta: f64,
    /// Optional goal bound: the goal state must satisfy
    /// `trace(cov) < eta` in addition to the model goal.
    pub eta: Option<f64>,
    /// Memory bound: the search gives up after this many expansions.
    pub max_expanded: usize,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            delta: 1.0,
            d_factor: 1.0,
            horizon: 20.0,
            weight: 1.5,
            alpha: 1.0,
            beta: 1.0,
            eta: None,
            max_expanded: 200_000,
        }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |msg: String| Err(EngineError::BadParams(msg));
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return bad(format!("delta must be positive, got {}", self.delta));
        }
        if !(self.d_factor >= 1.0 && self.d_factor.fract() == 0.0) {
            return bad(format!("d_factor must be an integer >= 1, got {}", self.d_factor));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if !(self.weight >= 1.0 && self.weight.is_finite()) {
            return bad(format!("weight must be >= 1, got {}", self.weight));
        }
        if !(self.alpha >= 0.0 && self.beta >= 0.0) {
            return bad(format!("cost weights must be nonnegative, got alpha {} beta {}", self.alpha, self.beta));
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0) {
                return bad(format!("eta must be positive, got {eta}"));
            }
        }
        if self.max_expanded == 0 {
            return bad("max_expanded must be positive".into());
        }
        Ok(())
    }

    /// Nominal translation per tick in meters.
    pub fn delta_trans(&self) -> f64 {
        self.delta * self.d_factor
    }
}

//! Semantic attachments: named external procedures that events invoke to
//! compute fluent values the declarative model cannot express — here, the
//! belief propagation that turns covariance evolution into a plain fluent.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::belief::{BeliefConfig, GaussianBelief};
use crate::world::{GridMap, Landmark};

use super::ground::GroundedModel;
use super::PddlError;

/// Read-only view of the engine state handed to an attachment when its
/// event fires. Fluent values are post-integration for the current tick.
pub struct AttachmentCall<'a> {
    pub fluents: &'a [f64],
    pub statics: &'a [f64],
    pub literal_true: &'a dyn Fn(usize) -> bool,
    pub belief: &'a GaussianBelief,
    pub model: &'a GroundedModel,
    pub map: &'a GridMap,
    pub landmarks: &'a [Landmark],
    pub belief_cfg: &'a BeliefConfig,
    /// Planner tick length in seconds.
    pub delta: f64,
    /// Motion discretization factor; per-tick nominal translation is
    /// `delta * d_factor`.
    pub d_factor: f64,
    /// Zero-based index of the tick being executed.
    pub tick_index: u64,
}

/// What an attachment returns: the evolved belief and one value per target
/// fluent the event declared, in declaration order.
#[derive(Debug, Clone)]
pub struct AttachmentOutcome {
    pub belief: GaussianBelief,
    pub values: Vec<f64>,
}

pub type AttachmentFn =
    Arc<dyn for<'a> Fn(&AttachmentCall<'a>) -> Result<AttachmentOutcome, String> + Send + Sync>;

/// Name → procedure table consulted while grounding events.
#[derive(Clone, Default)]
pub struct AttachmentRegistry {
    entries: BTreeMap<String, AttachmentFn>,
}

impl AttachmentRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register a procedure under a unique name.
    pub fn register(&mut self, name: &str, func: AttachmentFn) -> Result<(), PddlError> {
        if self.entries.contains_key(name) {
            return Err(PddlError::DuplicateAttachment(name.to_string()));
        }
        self.entries.insert(name.to_string(), func);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&AttachmentFn> {
        self.entries.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }
}

impl fmt::Debug for AttachmentRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.entries.keys()).finish()
    }
}

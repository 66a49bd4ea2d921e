//! Core library for belief-space navigation planning.
//!
//! The pipeline: a [`world`] occupancy map with point landmarks, a waypoint
//! graph sampled by [`sampler`], a small PDDL+ dialect parsed and grounded by
//! [`pddlplus`], Gaussian pose beliefs propagated by [`belief`], and the
//! discretized hybrid forward search in [`engine`] that ties them together.

pub mod belief;
pub mod engine;
pub mod pddlplus;
pub mod sampler;
pub mod world;

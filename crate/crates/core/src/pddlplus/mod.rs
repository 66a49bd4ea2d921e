//! A hybrid planning language: typed objects, predicates, numeric fluents,
//! instantaneous actions, continuous processes, triggered events, and
//! `(attached ...)` effects that bind event-computed fluents to registered
//! external procedures.
//!
//! The module parses a closed subset — anything outside it is rejected with
//! a `line:col` diagnostic, never silently skipped — prints models
//! canonically, and grounds a domain/problem pair against a waypoint graph
//! into the flat indexed form the execution engine consumes.

pub mod ast;
pub mod attach;
pub mod ground;
mod lexer;
mod parser;
pub mod printer;

use thiserror::Error;

pub use ast::{DomainModel, ProblemModel};
pub use attach::{AttachmentCall, AttachmentFn, AttachmentOutcome, AttachmentRegistry};
pub use ground::{ground, GroundedModel};
pub use parser::{parse_domain, parse_problem};
pub use printer::{print_domain, print_problem};

#[derive(Debug, Error)]
pub enum PddlError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: unsupported feature: {feature}")]
    Unsupported { line: usize, col: usize, feature: String },
    #[error("{line}:{col}: undeclared {kind}: {name}")]
    Undeclared { line: usize, col: usize, kind: &'static str, name: String },
    #[error("{line}:{col}: arity mismatch: {name} takes {expected} argument(s), found {found}")]
    Arity { line: usize, col: usize, name: String, expected: usize, found: usize },
    #[error("unresolved attachment: {0}")]
    UnresolvedAttachment(String),
    #[error("attachment registered twice: {0}")]
    DuplicateAttachment(String),
    #[error("waypoint/object mismatch: {0}")]
    WaypointMismatch(String),
    #[error("grounding error: {0}")]
    Grounding(String),
}

impl PddlError {
    /// Source line the diagnostic points at, when it has one.
    pub fn line(&self) -> Option<usize> {
        match self {
            PddlError::Syntax { line, .. }
            | PddlError::Unsupported { line, .. }
            | PddlError::Undeclared { line, .. }
            | PddlError::Arity { line, .. } => Some(*line),
            _ => None,
        }
    }
}

//! Grounding: instantiate a domain/problem pair over a waypoint graph into
//! flat, index-addressed actions, processes, and events.
//!
//! The graph supplies the spatial objects: every waypoint becomes an object
//! of type `waypoint` (the start as `wp_start`, the goal as `wp_goal`,
//! the rest as `wp<id>`), each undirected edge injects `connected` facts
//! and `distance` fluent values in both directions. Predicates and fluents
//! that no effect ever writes are *static*: their truth/values are resolved
//! at grounding time instead of living in the search state. Bindings are
//! enumerated per directed edge — a `connected` conjunct that names no edge
//! rules its binding out — so each schema that moves along the graph grounds
//! to exactly two instances per undirected edge.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fmt::Write as _;

use crate::sampler::WaypointGraph;

use super::ast::*;
use super::attach::{AttachmentFn, AttachmentRegistry};
use super::PddlError;

/// Object name conventions binding the graph into the problem.
pub const WAYPOINT_TYPE: &str = "waypoint";
pub const START_OBJECT: &str = "wp_start";
pub const GOAL_OBJECT: &str = "wp_goal";
/// Predicate/fluent conventions for the injected graph facts.
pub const CONNECTED_PREDICATE: &str = "connected";
pub const DISTANCE_FLUENT: &str = "distance";

/// Compiled numeric expression over the grounded fluent tables.
#[derive(Debug, Clone, PartialEq)]
pub enum GExpr {
    Num(f64),
    /// Index into the dynamic fluent vector.
    Dyn(usize),
    /// Index into the static value table.
    Static(usize),
    Neg(Box<GExpr>),
    Add(Box<GExpr>, Box<GExpr>),
    Sub(Box<GExpr>, Box<GExpr>),
    Mul(Box<GExpr>, Box<GExpr>),
    Div(Box<GExpr>, Box<GExpr>),
}

impl GExpr {
    pub fn eval(&self, fluents: &[f64], statics: &[f64]) -> f64 {
        match self {
            GExpr::Num(n) => *n,
            GExpr::Dyn(i) => fluents[*i],
            GExpr::Static(i) => statics[*i],
            GExpr::Neg(x) => -x.eval(fluents, statics),
            GExpr::Add(a, b) => a.eval(fluents, statics) + b.eval(fluents, statics),
            GExpr::Sub(a, b) => a.eval(fluents, statics) - b.eval(fluents, statics),
            GExpr::Mul(a, b) => a.eval(fluents, statics) * b.eval(fluents, statics),
            GExpr::Div(a, b) => a.eval(fluents, statics) / b.eval(fluents, statics),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroundCondition {
    /// A statically-decided conjunct that could not be dropped (e.g. a goal
    /// literal over a static predicate).
    Const(bool),
    Literal { positive: bool, lit: usize },
    Compare { op: CmpOp, lhs: GExpr, rhs: GExpr },
}

impl GroundCondition {
    pub fn holds(&self, literal_true: &dyn Fn(usize) -> bool, fluents: &[f64], statics: &[f64]) -> bool {
        match self {
            GroundCondition::Const(b) => *b,
            GroundCondition::Literal { positive, lit } => literal_true(*lit) == *positive,
            GroundCondition::Compare { op, lhs, rhs } => {
                op.holds(lhs.eval(fluents, statics), rhs.eval(fluents, statics))
            }
        }
    }

    /// [`GroundCondition::holds`] with `eps` slack on numeric comparisons;
    /// literal conjuncts are unaffected.
    pub fn holds_eps(
        &self,
        literal_true: &dyn Fn(usize) -> bool,
        fluents: &[f64],
        statics: &[f64],
        eps: f64,
    ) -> bool {
        match self {
            GroundCondition::Compare { op, lhs, rhs } => {
                op.holds_eps(lhs.eval(fluents, statics), rhs.eval(fluents, statics), eps)
            }
            other => other.holds(literal_true, fluents, statics),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroundEffect {
    Add(usize),
    Del(usize),
    Assign { slot: usize, value: GExpr },
    Increase { slot: usize, value: GExpr },
    Decrease { slot: usize, value: GExpr },
}

/// Continuous effect: `slot` changes at signed `rate` per second while the
/// owning process is active.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundRate {
    pub slot: usize,
    pub increase: bool,
    pub rate: GExpr,
}

#[derive(Debug, Clone)]
pub struct GroundAction {
    pub schema: String,
    pub args: Vec<String>,
    pub display: String,
    pub pre: Vec<GroundCondition>,
    pub effects: Vec<GroundEffect>,
}

#[derive(Debug, Clone)]
pub struct GroundProcess {
    pub schema: String,
    pub args: Vec<String>,
    pub display: String,
    pub pre: Vec<GroundCondition>,
    pub rates: Vec<GroundRate>,
}

#[derive(Clone)]
pub struct GroundAttachment {
    pub name: String,
    pub func: AttachmentFn,
    /// Dynamic fluent slots the attachment writes, in declaration order.
    pub targets: Vec<usize>,
}

impl fmt::Debug for GroundAttachment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GroundAttachment")
            .field("name", &self.name)
            .field("targets", &self.targets)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub struct GroundEvent {
    pub schema: String,
    pub args: Vec<String>,
    pub display: String,
    pub pre: Vec<GroundCondition>,
    pub effects: Vec<GroundEffect>,
    pub attachment: Option<GroundAttachment>,
}

/// The fully-instantiated model the engine executes. Immutable once built.
#[derive(Debug, Clone)]
pub struct GroundedModel {
    pub domain_name: String,
    pub problem_name: String,
    /// All objects as `(name, type)`, non-waypoint objects first, then
    /// waypoints in graph-id order.
    pub objects: Vec<(String, String)>,
    /// Display names of changeable ground literals; index = literal id.
    pub literal_names: Vec<String>,
    /// Display names of changeable ground fluents; index = fluent slot.
    pub fluent_names: Vec<String>,
    /// Display names and fixed values of static fluents.
    pub static_names: Vec<String>,
    pub static_values: Vec<f64>,
    /// Ground static predicates that are true (resolved at grounding time).
    pub static_literals: BTreeSet<String>,
    pub init_literals: Vec<usize>,
    pub init_fluents: Vec<f64>,
    pub goal: Vec<GroundCondition>,
    pub actions: Vec<GroundAction>,
    pub processes: Vec<GroundProcess>,
    pub events: Vec<GroundEvent>,
    /// Object name → graph waypoint id for every waypoint object.
    pub waypoint_of_object: BTreeMap<String, usize>,
    /// Planar position per graph waypoint id.
    pub waypoint_xy: Vec<(f64, f64)>,
    literal_index: BTreeMap<String, usize>,
    fluent_index: BTreeMap<String, usize>,
    static_index: BTreeMap<String, usize>,
}

impl GroundedModel {
    pub fn literal_id(&self, display: &str) -> Option<usize> {
        self.literal_index.get(display).copied()
    }

    pub fn fluent_id(&self, display: &str) -> Option<usize> {
        self.fluent_index.get(display).copied()
    }

    pub fn static_id(&self, display: &str) -> Option<usize> {
        self.static_index.get(display).copied()
    }

    /// Deterministic text dump for debugging and golden comparisons.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "grounded model {} / {}", self.domain_name, self.problem_name);
        let _ = writeln!(
            out,
            "objects {} literals {} fluents {} statics {}",
            self.objects.len(),
            self.literal_names.len(),
            self.fluent_names.len(),
            self.static_names.len()
        );
        let _ = writeln!(
            out,
            "actions {} processes {} events {}",
            self.actions.len(),
            self.processes.len(),
            self.events.len()
        );
        for a in &self.actions {
            let _ = writeln!(out, "action {}", a.display);
        }
        for p in &self.processes {
            let _ = writeln!(out, "process {}", p.display);
        }
        for e in &self.events {
            let att = e
                .attachment
                .as_ref()
                .map(|a| format!(" [attached {}]", a.name))
                .unwrap_or_default();
            let _ = writeln!(out, "event {}{att}", e.display);
        }
        out
    }
}

fn display_of(name: &str, args: &[String]) -> String {
    if args.is_empty() {
        name.to_string()
    } else {
        format!("{} {}", name, args.join(" "))
    }
}

fn ground_terms(terms: &[Term], binding: &BTreeMap<String, String>) -> Result<Vec<String>, PddlError> {
    terms
        .iter()
        .map(|t| match t {
            Term::Var(v) => binding.get(v).cloned().ok_or_else(|| {
                PddlError::Grounding(format!("unbound variable ?{v} survived grounding"))
            }),
            Term::Obj(o) => Ok(o.clone()),
        })
        .collect()
}

/// Which predicate / function symbols can ever change: anything written by
/// an action or event effect, a process rate, or an attachment.
fn classify(domain: &DomainModel) -> (BTreeSet<String>, BTreeSet<String>) {
    let mut dyn_preds = BTreeSet::new();
    let mut dyn_fns = BTreeSet::new();
    let mut scan_effects = |effects: &[Effect]| {
        for e in effects {
            match e {
                Effect::Add(p) | Effect::Del(p) => {
                    dyn_preds.insert(p.name.clone());
                }
                Effect::Assign { target, .. }
                | Effect::Increase { target, .. }
                | Effect::Decrease { target, .. } => {
                    dyn_fns.insert(target.name.clone());
                }
                Effect::Attached { targets, .. } => {
                    for t in targets {
                        dyn_fns.insert(t.name.clone());
                    }
                }
            }
        }
    };
    for a in &domain.actions {
        scan_effects(&a.effects);
    }
    for ev in &domain.events {
        scan_effects(&ev.effects);
    }
    for pr in &domain.processes {
        for r in &pr.effects {
            dyn_fns.insert(r.target.name.clone());
        }
    }
    (dyn_preds, dyn_fns)
}

struct Collector<'a> {
    dyn_preds: &'a BTreeSet<String>,
    dyn_fns: &'a BTreeSet<String>,
    literals: BTreeSet<String>,
    fluents: BTreeSet<String>,
    statics: BTreeSet<String>,
}

impl<'a> Collector<'a> {
    fn new(dyn_preds: &'a BTreeSet<String>, dyn_fns: &'a BTreeSet<String>) -> Self {
        Collector {
            dyn_preds,
            dyn_fns,
            literals: BTreeSet::new(),
            fluents: BTreeSet::new(),
            statics: BTreeSet::new(),
        }
    }

    fn pred(&mut self, name: &str, args: &[String]) {
        if self.dyn_preds.contains(name) {
            self.literals.insert(display_of(name, args));
        }
    }

    fn fluent(&mut self, name: &str, args: &[String]) {
        let d = display_of(name, args);
        if self.dyn_fns.contains(name) {
            self.fluents.insert(d);
        } else {
            self.statics.insert(d);
        }
    }
}

/// A construct body after parameter substitution, before index compilation.
struct BoundBody {
    schema: String,
    args: Vec<String>,
    pre: Vec<Condition>,
    effects: Vec<Effect>,
    rates: Vec<RateEffect>,
}

fn substitute_condition(c: &Condition, binding: &BTreeMap<String, String>) -> Result<Condition, PddlError> {
    Ok(match c {
        Condition::Literal { positive, pred } => Condition::Literal {
            positive: *positive,
            pred: PredRef {
                name: pred.name.clone(),
                args: ground_terms(&pred.args, binding)?.into_iter().map(Term::Obj).collect(),
            },
        },
        Condition::Compare { op, lhs, rhs } => Condition::Compare {
            op: *op,
            lhs: substitute_expr(lhs, binding)?,
            rhs: substitute_expr(rhs, binding)?,
        },
    })
}

fn substitute_expr(e: &Expr, binding: &BTreeMap<String, String>) -> Result<Expr, PddlError> {
    Ok(match e {
        Expr::Num(n) => Expr::Num(*n),
        Expr::Fluent(f) => Expr::Fluent(FluentRef {
            name: f.name.clone(),
            args: ground_terms(&f.args, binding)?.into_iter().map(Term::Obj).collect(),
        }),
        Expr::Neg(x) => Expr::Neg(Box::new(substitute_expr(x, binding)?)),
        Expr::Add(a, b) => Expr::Add(
            Box::new(substitute_expr(a, binding)?),
            Box::new(substitute_expr(b, binding)?),
        ),
        Expr::Sub(a, b) => Expr::Sub(
            Box::new(substitute_expr(a, binding)?),
            Box::new(substitute_expr(b, binding)?),
        ),
        Expr::Mul(a, b) => Expr::Mul(
            Box::new(substitute_expr(a, binding)?),
            Box::new(substitute_expr(b, binding)?),
        ),
        Expr::Div(a, b) => Expr::Div(
            Box::new(substitute_expr(a, binding)?),
            Box::new(substitute_expr(b, binding)?),
        ),
    })
}

fn substitute_effect(e: &Effect, binding: &BTreeMap<String, String>) -> Result<Effect, PddlError> {
    Ok(match e {
        Effect::Add(p) => Effect::Add(PredRef {
            name: p.name.clone(),
            args: ground_terms(&p.args, binding)?.into_iter().map(Term::Obj).collect(),
        }),
        Effect::Del(p) => Effect::Del(PredRef {
            name: p.name.clone(),
            args: ground_terms(&p.args, binding)?.into_iter().map(Term::Obj).collect(),
        }),
        Effect::Assign { target, value } => Effect::Assign {
            target: subst_fluent(target, binding)?,
            value: substitute_expr(value, binding)?,
        },
        Effect::Increase { target, value } => Effect::Increase {
            target: subst_fluent(target, binding)?,
            value: substitute_expr(value, binding)?,
        },
        Effect::Decrease { target, value } => Effect::Decrease {
            target: subst_fluent(target, binding)?,
            value: substitute_expr(value, binding)?,
        },
        Effect::Attached { name, targets } => Effect::Attached {
            name: name.clone(),
            targets: targets
                .iter()
                .map(|t| subst_fluent(t, binding))
                .collect::<Result<_, _>>()?,
        },
    })
}

fn subst_fluent(f: &FluentRef, binding: &BTreeMap<String, String>) -> Result<FluentRef, PddlError> {
    Ok(FluentRef {
        name: f.name.clone(),
        args: ground_terms(&f.args, binding)?.into_iter().map(Term::Obj).collect(),
    })
}

fn obj_args(terms: &[Term]) -> Vec<String> {
    terms
        .iter()
        .map(|t| match t {
            Term::Obj(o) => o.clone(),
            Term::Var(v) => format!("?{v}"),
        })
        .collect()
}

/// Enumerate all type-consistent bindings for `params` over `by_type`.
fn bindings(
    params: &[Param],
    by_type: &BTreeMap<String, Vec<String>>,
) -> Vec<BTreeMap<String, String>> {
    if params.is_empty() {
        return vec![BTreeMap::new()];
    }
    let empty = Vec::new();
    let pools: Vec<&Vec<String>> = params
        .iter()
        .map(|p| by_type.get(&p.ty).unwrap_or(&empty))
        .collect();
    if pools.iter().any(|p| p.is_empty()) {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; params.len()];
    loop {
        let mut b = BTreeMap::new();
        for (k, p) in params.iter().enumerate() {
            b.insert(p.name.clone(), pools[k][idx[k]].clone());
        }
        out.push(b);
        let mut k = params.len();
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < pools[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

pub fn ground(
    domain: &DomainModel,
    problem: &ProblemModel,
    graph: &WaypointGraph,
    registry: &AttachmentRegistry,
) -> Result<GroundedModel, PddlError> {
    if !domain.types.iter().any(|t| t == WAYPOINT_TYPE) {
        return Err(PddlError::WaypointMismatch(format!(
            "domain declares no '{WAYPOINT_TYPE}' type to bind the graph to"
        )));
    }

    // -- objects ---------------------------------------------------------
    let merged = graph.start_id == graph.goal_id;
    let wp_name = |id: usize| -> String {
        if id == graph.start_id {
            START_OBJECT.into()
        } else if id == graph.goal_id {
            GOAL_OBJECT.into()
        } else {
            format!("wp{id}")
        }
    };
    for (name, ty) in &problem.objects {
        if ty == WAYPOINT_TYPE && name != START_OBJECT && name != GOAL_OBJECT {
            return Err(PddlError::WaypointMismatch(format!(
                "problem declares waypoint object '{name}'; only {START_OBJECT} and {GOAL_OBJECT} may be declared — the rest come from the graph"
            )));
        }
        if ty != WAYPOINT_TYPE && (name == START_OBJECT || name == GOAL_OBJECT) {
            return Err(PddlError::WaypointMismatch(format!(
                "object '{name}' must have type {WAYPOINT_TYPE}, found {ty}"
            )));
        }
    }

    // when start and goal coincide, wp_goal references collapse onto wp_start
    let canon = |name: &str| -> String {
        if merged && name == GOAL_OBJECT {
            START_OBJECT.into()
        } else {
            name.into()
        }
    };

    let mut objects: Vec<(String, String)> = problem
        .objects
        .iter()
        .filter(|(_, ty)| ty != WAYPOINT_TYPE)
        .cloned()
        .collect();
    let mut waypoint_of_object = BTreeMap::new();
    for wp in &graph.waypoints {
        // with start == goal, wp_name already resolves the shared waypoint
        // to wp_start, so wp_goal simply never appears as an object
        let name = wp_name(wp.id);
        waypoint_of_object.insert(name.clone(), wp.id);
        objects.push((name, WAYPOINT_TYPE.into()));
    }
    let waypoint_xy: Vec<(f64, f64)> = graph.waypoints.iter().map(|w| (w.pose.x, w.pose.y)).collect();

    let mut by_type: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (name, ty) in &objects {
        by_type.entry(ty.clone()).or_default().push(name.clone());
    }

    // -- static/dynamic classification and injected graph facts -----------
    let (dyn_preds, dyn_fns) = classify(domain);
    if dyn_preds.contains(CONNECTED_PREDICATE) {
        return Err(PddlError::Grounding(format!(
            "predicate '{CONNECTED_PREDICATE}' is written by an effect; graph connectivity must be static"
        )));
    }
    if dyn_fns.contains(DISTANCE_FLUENT) {
        return Err(PddlError::Grounding(format!(
            "fluent '{DISTANCE_FLUENT}' is written by an effect; edge lengths must be static"
        )));
    }

    let mut static_literals: BTreeSet<String> = BTreeSet::new();
    let mut static_values_map: BTreeMap<String, f64> = BTreeMap::new();
    let mut init_literal_names: BTreeSet<String> = BTreeSet::new();
    let mut init_fluent_map: BTreeMap<String, f64> = BTreeMap::new();

    for l in &problem.init_literals {
        let args: Vec<String> = obj_args(&l.args).iter().map(|a| canon(a)).collect();
        let d = display_of(&l.name, &args);
        if dyn_preds.contains(&l.name) {
            init_literal_names.insert(d);
        } else {
            static_literals.insert(d);
        }
    }
    for (f, v) in &problem.init_fluents {
        let args: Vec<String> = obj_args(&f.args).iter().map(|a| canon(a)).collect();
        let d = display_of(&f.name, &args);
        if dyn_fns.contains(&f.name) {
            init_fluent_map.insert(d, *v);
        } else {
            static_values_map.insert(d, *v);
        }
    }

    let has_connected = domain.predicate(CONNECTED_PREDICATE).is_some();
    let has_distance = domain.function(DISTANCE_FLUENT).is_some();
    for e in &graph.edges {
        let (na, nb) = (wp_name(e.a), wp_name(e.b));
        let (na, nb) = (canon(&na), canon(&nb));
        if has_connected {
            static_literals.insert(display_of(CONNECTED_PREDICATE, &[na.clone(), nb.clone()]));
            static_literals.insert(display_of(CONNECTED_PREDICATE, &[nb.clone(), na.clone()]));
        }
        if has_distance {
            static_values_map.insert(display_of(DISTANCE_FLUENT, &[na.clone(), nb.clone()]), e.length);
            static_values_map.insert(display_of(DISTANCE_FLUENT, &[nb, na]), e.length);
        }
    }

    // -- enumerate bindings with static pruning ---------------------------
    enum Kind {
        Action,
        Process,
        Event,
    }
    let mut bound_actions: Vec<BoundBody> = Vec::new();
    let mut bound_processes: Vec<BoundBody> = Vec::new();
    let mut bound_events: Vec<BoundBody> = Vec::new();

    let mut instantiate = |kind: Kind,
                           name: &str,
                           params: &[Param],
                           pre: &[Condition],
                           effects: &[Effect],
                           rates: &[RateEffect]|
     -> Result<(), PddlError> {
        'binding: for b in bindings(params, &by_type) {
            let args: Vec<String> = params.iter().map(|p| b[&p.name].clone()).collect();
            let mut kept_pre = Vec::new();
            for c in pre {
                let gc = substitute_condition(c, &b)?;
                // Bindings are pruned on graph topology alone: a conjunct over
                // the connectivity relation either names a real directed edge
                // (and is dropped as settled) or rules the binding out.  Other
                // static conjuncts stay in place and compile to constants, so
                // the instance count per schema tracks the edge count exactly.
                if let Condition::Literal { positive, pred } = &gc {
                    if pred.name == CONNECTED_PREDICATE {
                        let d = display_of(&pred.name, &obj_args(&pred.args));
                        let truth = static_literals.contains(&d);
                        if truth == *positive {
                            continue;
                        }
                        continue 'binding;
                    }
                }
                kept_pre.push(gc);
            }
            let body = BoundBody {
                schema: name.to_string(),
                args,
                pre: kept_pre,
                effects: effects
                    .iter()
                    .map(|e| substitute_effect(e, &b))
                    .collect::<Result<_, _>>()?,
                rates: rates
                    .iter()
                    .map(|r| {
                        Ok(RateEffect {
                            target: subst_fluent(&r.target, &b)?,
                            increase: r.increase,
                            rate: substitute_expr(&r.rate, &b)?,
                        })
                    })
                    .collect::<Result<_, _>>()?,
            };
            match kind {
                Kind::Action => bound_actions.push(body),
                Kind::Process => bound_processes.push(body),
                Kind::Event => bound_events.push(body),
            }
        }
        Ok(())
    };

    for a in &domain.actions {
        instantiate(Kind::Action, &a.name, &a.params, &a.precondition, &a.effects, &[])?;
    }
    for p in &domain.processes {
        instantiate(Kind::Process, &p.name, &p.params, &p.precondition, &[], &p.effects)?;
    }
    for ev in &domain.events {
        instantiate(Kind::Event, &ev.name, &ev.params, &ev.precondition, &ev.effects, &[])?;
    }

    // -- collect the changeable universe -----------------------------------
    fn walk_expr(coll: &mut Collector, e: &Expr) {
        let mut stack = vec![e];
        while let Some(e) = stack.pop() {
            match e {
                Expr::Num(_) => {}
                Expr::Fluent(f) => coll.fluent(&f.name, &obj_args(&f.args)),
                Expr::Neg(x) => stack.push(x),
                Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                    stack.push(a);
                    stack.push(b);
                }
            }
        }
    }
    fn walk_condition(coll: &mut Collector, c: &Condition) {
        match c {
            Condition::Literal { pred, .. } => coll.pred(&pred.name, &obj_args(&pred.args)),
            Condition::Compare { lhs, rhs, .. } => {
                walk_expr(coll, lhs);
                walk_expr(coll, rhs);
            }
        }
    }
    fn walk_effect(coll: &mut Collector, e: &Effect) {
        match e {
            Effect::Add(p) | Effect::Del(p) => coll.pred(&p.name, &obj_args(&p.args)),
            Effect::Assign { target, value }
            | Effect::Increase { target, value }
            | Effect::Decrease { target, value } => {
                coll.fluent(&target.name, &obj_args(&target.args));
                walk_expr(coll, value);
            }
            Effect::Attached { targets, .. } => {
                for t in targets {
                    coll.fluent(&t.name, &obj_args(&t.args));
                }
            }
        }
    }

    let mut coll = Collector::new(&dyn_preds, &dyn_fns);
    for body in bound_actions.iter().chain(&bound_processes).chain(&bound_events) {
        for c in &body.pre {
            walk_condition(&mut coll, c);
        }
        for e in &body.effects {
            walk_effect(&mut coll, e);
        }
        for r in &body.rates {
            coll.fluent(&r.target.name, &obj_args(&r.target.args));
            walk_expr(&mut coll, &r.rate);
        }
    }
    for c in &problem.goal {
        // goal references canonicalized object names
        let b = BTreeMap::new();
        let mut gc = substitute_condition(c, &b)?;
        canon_condition(&mut gc, &canon);
        walk_condition(&mut coll, &gc);
    }
    for name in &init_literal_names {
        coll.literals.insert(name.clone());
    }
    for name in init_fluent_map.keys() {
        coll.fluents.insert(name.clone());
    }
    for name in static_values_map.keys() {
        coll.statics.insert(name.clone());
    }

    let literal_names: Vec<String> = coll.literals.iter().cloned().collect();
    let fluent_names: Vec<String> = coll.fluents.iter().cloned().collect();
    let static_names: Vec<String> = coll.statics.iter().cloned().collect();
    let literal_index: BTreeMap<String, usize> =
        literal_names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
    let fluent_index: BTreeMap<String, usize> =
        fluent_names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
    let static_index: BTreeMap<String, usize> =
        static_names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
    let static_values: Vec<f64> = static_names
        .iter()
        .map(|n| static_values_map.get(n).copied().unwrap_or(0.0))
        .collect();

    // -- compile to indices -------------------------------------------------
    let compile_expr = |e: &Expr| -> Result<GExpr, PddlError> {
        fn go(
            e: &Expr,
            fi: &BTreeMap<String, usize>,
            si: &BTreeMap<String, usize>,
        ) -> Result<GExpr, PddlError> {
            Ok(match e {
                Expr::Num(n) => GExpr::Num(*n),
                Expr::Fluent(f) => {
                    let d = display_of(&f.name, &obj_args(&f.args));
                    if let Some(&i) = fi.get(&d) {
                        GExpr::Dyn(i)
                    } else if let Some(&i) = si.get(&d) {
                        GExpr::Static(i)
                    } else {
                        return Err(PddlError::Grounding(format!("fluent '{d}' missing from universe")));
                    }
                }
                Expr::Neg(x) => GExpr::Neg(Box::new(go(x, fi, si)?)),
                Expr::Add(a, b) => GExpr::Add(Box::new(go(a, fi, si)?), Box::new(go(b, fi, si)?)),
                Expr::Sub(a, b) => GExpr::Sub(Box::new(go(a, fi, si)?), Box::new(go(b, fi, si)?)),
                Expr::Mul(a, b) => GExpr::Mul(Box::new(go(a, fi, si)?), Box::new(go(b, fi, si)?)),
                Expr::Div(a, b) => GExpr::Div(Box::new(go(a, fi, si)?), Box::new(go(b, fi, si)?)),
            })
        }
        go(e, &fluent_index, &static_index)
    };
    let compile_condition = |c: &Condition| -> Result<GroundCondition, PddlError> {
        Ok(match c {
            Condition::Literal { positive, pred } => {
                let d = display_of(&pred.name, &obj_args(&pred.args));
                if dyn_preds.contains(&pred.name) {
                    let lit = *literal_index.get(&d).ok_or_else(|| {
                        PddlError::Grounding(format!("literal '{d}' missing from universe"))
                    })?;
                    GroundCondition::Literal { positive: *positive, lit }
                } else {
                    GroundCondition::Const(static_literals.contains(&d) == *positive)
                }
            }
            Condition::Compare { op, lhs, rhs } => GroundCondition::Compare {
                op: *op,
                lhs: compile_expr(lhs)?,
                rhs: compile_expr(rhs)?,
            },
        })
    };
    let compile_effects = |effects: &[Effect]| -> Result<(Vec<GroundEffect>, Option<(String, Vec<usize>)>), PddlError> {
        let mut out = Vec::new();
        let mut attachment: Option<(String, Vec<usize>)> = None;
        for e in effects {
            match e {
                Effect::Add(p) => {
                    let d = display_of(&p.name, &obj_args(&p.args));
                    out.push(GroundEffect::Add(literal_index[&d]));
                }
                Effect::Del(p) => {
                    let d = display_of(&p.name, &obj_args(&p.args));
                    out.push(GroundEffect::Del(literal_index[&d]));
                }
                Effect::Assign { target, value } => out.push(GroundEffect::Assign {
                    slot: fluent_index[&display_of(&target.name, &obj_args(&target.args))],
                    value: compile_expr(value)?,
                }),
                Effect::Increase { target, value } => out.push(GroundEffect::Increase {
                    slot: fluent_index[&display_of(&target.name, &obj_args(&target.args))],
                    value: compile_expr(value)?,
                }),
                Effect::Decrease { target, value } => out.push(GroundEffect::Decrease {
                    slot: fluent_index[&display_of(&target.name, &obj_args(&target.args))],
                    value: compile_expr(value)?,
                }),
                Effect::Attached { name, targets } => {
                    if attachment.is_some() {
                        return Err(PddlError::Grounding(
                            "an event may carry at most one attached effect".into(),
                        ));
                    }
                    let slots = targets
                        .iter()
                        .map(|t| fluent_index[&display_of(&t.name, &obj_args(&t.args))])
                        .collect();
                    attachment = Some((name.clone(), slots));
                }
            }
        }
        Ok((out, attachment))
    };

    let mut actions = Vec::new();
    for body in &bound_actions {
        let (effects, att) = compile_effects(&body.effects)?;
        if att.is_some() {
            return Err(PddlError::Grounding(format!(
                "action '{}' carries an attached effect; only events may",
                body.schema
            )));
        }
        actions.push(GroundAction {
            schema: body.schema.clone(),
            args: body.args.clone(),
            display: display_of(&body.schema, &body.args),
            pre: body.pre.iter().map(compile_condition).collect::<Result<_, _>>()?,
            effects,
        });
    }
    let mut processes = Vec::new();
    for body in &bound_processes {
        processes.push(GroundProcess {
            schema: body.schema.clone(),
            args: body.args.clone(),
            display: display_of(&body.schema, &body.args),
            pre: body.pre.iter().map(compile_condition).collect::<Result<_, _>>()?,
            rates: body
                .rates
                .iter()
                .map(|r| {
                    let d = display_of(&r.target.name, &obj_args(&r.target.args));
                    Ok(GroundRate {
                        slot: *fluent_index.get(&d).ok_or_else(|| {
                            PddlError::Grounding(format!("rate target '{d}' missing from universe"))
                        })?,
                        increase: r.increase,
                        rate: compile_expr(&r.rate)?,
                    })
                })
                .collect::<Result<_, _>>()?,
        });
    }
    let mut events = Vec::new();
    for body in &bound_events {
        let (effects, att) = compile_effects(&body.effects)?;
        let attachment = match att {
            None => None,
            Some((name, targets)) => {
                let func = registry
                    .get(&name)
                    .ok_or_else(|| PddlError::UnresolvedAttachment(name.clone()))?
                    .clone();
                Some(GroundAttachment { name, func, targets })
            }
        };
        events.push(GroundEvent {
            schema: body.schema.clone(),
            args: body.args.clone(),
            display: display_of(&body.schema, &body.args),
            pre: body.pre.iter().map(compile_condition).collect::<Result<_, _>>()?,
            effects,
            attachment,
        });
    }

    // -- initial state and goal ---------------------------------------------
    let init_literals: Vec<usize> =
        init_literal_names.iter().map(|n| literal_index[n]).collect();
    let init_fluents: Vec<f64> = fluent_names
        .iter()
        .map(|n| init_fluent_map.get(n).copied().unwrap_or(0.0))
        .collect();
    let mut goal = Vec::new();
    for c in &problem.goal {
        let b = BTreeMap::new();
        let mut gc = substitute_condition(c, &b)?;
        canon_condition(&mut gc, &canon);
        goal.push(compile_condition(&gc)?);
    }

    Ok(GroundedModel {
        domain_name: domain.name.clone(),
        problem_name: problem.name.clone(),
        objects,
        literal_names,
        fluent_names,
        static_names,
        static_values,
        static_literals,
        init_literals,
        init_fluents,
        goal,
        actions,
        processes,
        events,
        waypoint_of_object,
        waypoint_xy,
        literal_index,
        fluent_index,
        static_index,
    })
}

/// Rewrite object names inside an already-ground condition (used to collapse
/// `wp_goal` onto `wp_start` when the graph's start and goal coincide).
fn canon_condition(c: &mut Condition, canon: &dyn Fn(&str) -> String) {
    fn fix_terms(terms: &mut [Term], canon: &dyn Fn(&str) -> String) {
        for t in terms {
            if let Term::Obj(o) = t {
                *o = canon(o);
            }
        }
    }
    fn fix_expr(e: &mut Expr, canon: &dyn Fn(&str) -> String) {
        match e {
            Expr::Num(_) => {}
            Expr::Fluent(f) => fix_terms(&mut f.args, canon),
            Expr::Neg(x) => fix_expr(x, canon),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                fix_expr(a, canon);
                fix_expr(b, canon);
            }
        }
    }
    match c {
        Condition::Literal { pred, .. } => fix_terms(&mut pred.args, canon),
        Condition::Compare { lhs, rhs, .. } => {
            fix_expr(lhs, canon);
            fix_expr(rhs, canon);
        }
    }
}

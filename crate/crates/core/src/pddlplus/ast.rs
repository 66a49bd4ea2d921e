//! Abstract syntax for the planning-language subset.
//!
//! Structural equality (`PartialEq`) is the round-trip contract: parsing the
//! canonical print of a model yields a model equal to the original.

/// A named parameter with its type, e.g. `?from - waypoint`.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredicateDecl {
    pub name: String,
    pub params: Vec<Param>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDecl {
    pub name: String,
    pub params: Vec<Param>,
}

/// A term in a predicate or fluent reference: a `?variable` bound by the
/// enclosing operator, or a literal object name (ground, problem-side).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Obj(String),
}

impl Term {
    pub fn display(&self) -> String {
        match self {
            Term::Var(v) => format!("?{v}"),
            Term::Obj(o) => o.clone(),
        }
    }
}

/// Reference to a predicate with argument terms.
#[derive(Debug, Clone, PartialEq)]
pub struct PredRef {
    pub name: String,
    pub args: Vec<Term>,
}

/// Reference to a numeric fluent with argument terms.
#[derive(Debug, Clone, PartialEq)]
pub struct FluentRef {
    pub name: String,
    pub args: Vec<Term>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl CmpOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "=",
        }
    }

    pub fn holds(&self, lhs: f64, rhs: f64) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
            CmpOp::Eq => lhs == rhs,
        }
    }

    /// Like [`CmpOp::holds`] but with `eps` slack in the permissive
    /// direction. Replaying a schedule under a different tick length
    /// perturbs integrated fluents by a few ulps; exact thresholds would
    /// reject otherwise-identical runs.
    pub fn holds_eps(&self, lhs: f64, rhs: f64, eps: f64) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs + eps,
            CmpOp::Le => lhs <= rhs + eps,
            CmpOp::Gt => lhs > rhs - eps,
            CmpOp::Ge => lhs >= rhs - eps,
            CmpOp::Eq => (lhs - rhs).abs() <= eps,
        }
    }
}

/// Numeric expression over fluents and constants. N-ary `+`/`*` input is
/// folded left into binary nodes at parse time.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Fluent(FluentRef),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
}

/// One conjunct of a precondition or goal.
#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    Literal { positive: bool, pred: PredRef },
    Compare { op: CmpOp, lhs: Expr, rhs: Expr },
}

/// Instantaneous effect of an action or event.
#[derive(Debug, Clone, PartialEq)]
pub enum Effect {
    Add(PredRef),
    Del(PredRef),
    Assign { target: FluentRef, value: Expr },
    Increase { target: FluentRef, value: Expr },
    Decrease { target: FluentRef, value: Expr },
    /// Event-only: the named registered procedure computes the listed
    /// fluents from the engine-state view.
    Attached { name: String, targets: Vec<FluentRef> },
}

/// Continuous effect of a process: the target fluent changes at `rate`
/// (sign applied) per unit time while the process is active.
#[derive(Debug, Clone, PartialEq)]
pub struct RateEffect {
    pub target: FluentRef,
    pub increase: bool,
    pub rate: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionDef {
    pub name: String,
    pub params: Vec<Param>,
    pub precondition: Vec<Condition>,
    pub effects: Vec<Effect>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessDef {
    pub name: String,
    pub params: Vec<Param>,
    pub precondition: Vec<Condition>,
    pub effects: Vec<RateEffect>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventDef {
    pub name: String,
    pub params: Vec<Param>,
    pub precondition: Vec<Condition>,
    pub effects: Vec<Effect>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainModel {
    pub name: String,
    pub requirements: Vec<String>,
    pub types: Vec<String>,
    pub predicates: Vec<PredicateDecl>,
    pub functions: Vec<FunctionDecl>,
    pub actions: Vec<ActionDef>,
    pub processes: Vec<ProcessDef>,
    pub events: Vec<EventDef>,
}

impl DomainModel {
    pub fn predicate(&self, name: &str) -> Option<&PredicateDecl> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn function(&self, name: &str) -> Option<&FunctionDecl> {
        self.functions.iter().find(|f| f.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemModel {
    pub name: String,
    pub domain: String,
    /// `(name, type)` pairs in declaration order.
    pub objects: Vec<(String, String)>,
    pub init_literals: Vec<PredRef>,
    pub init_fluents: Vec<(FluentRef, f64)>,
    pub goal: Vec<Condition>,
}

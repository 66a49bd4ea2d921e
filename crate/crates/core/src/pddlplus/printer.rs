//! Canonical pretty-printer. The output is deterministic — equal models
//! print to identical bytes regardless of input whitespace — and reparses
//! to a structurally equal model.

use std::fmt::Write as _;

use super::ast::*;

/// Format an f64 the way the lexer reads it back losslessly: Rust's
/// shortest round-trip representation.
fn num(n: f64) -> String {
    format!("{n}")
}

fn params(ps: &[Param]) -> String {
    // group consecutive parameters that share a type: ?a ?b - t
    let mut out = String::new();
    let mut i = 0;
    while i < ps.len() {
        let mut j = i;
        while j + 1 < ps.len() && ps[j + 1].ty == ps[i].ty {
            j += 1;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        for p in &ps[i..=j] {
            let _ = write!(out, "?{} ", p.name);
        }
        let _ = write!(out, "- {}", ps[i].ty);
        i = j + 1;
    }
    out
}

fn fluent(f: &FluentRef) -> String {
    let mut out = format!("({}", f.name);
    for a in &f.args {
        out.push(' ');
        out.push_str(&a.display());
    }
    out.push(')');
    out
}

fn pred(p: &PredRef) -> String {
    let mut out = format!("({}", p.name);
    for a in &p.args {
        out.push(' ');
        out.push_str(&a.display());
    }
    out.push(')');
    out
}

pub fn expr(e: &Expr) -> String {
    match e {
        Expr::Num(n) => num(*n),
        Expr::Fluent(f) => fluent(f),
        Expr::Neg(x) => format!("(- {})", expr(x)),
        Expr::Add(a, b) => format!("(+ {} {})", expr(a), expr(b)),
        Expr::Sub(a, b) => format!("(- {} {})", expr(a), expr(b)),
        Expr::Mul(a, b) => format!("(* {} {})", expr(a), expr(b)),
        Expr::Div(a, b) => format!("(/ {} {})", expr(a), expr(b)),
    }
}

fn condition(c: &Condition) -> String {
    match c {
        Condition::Literal { positive: true, pred: p } => pred(p),
        Condition::Literal { positive: false, pred: p } => format!("(not {})", pred(p)),
        Condition::Compare { op, lhs, rhs } => {
            format!("({} {} {})", op.symbol(), expr(lhs), expr(rhs))
        }
    }
}

fn conditions(cs: &[Condition]) -> String {
    let mut out = String::from("(and");
    for c in cs {
        out.push(' ');
        out.push_str(&condition(c));
    }
    out.push(')');
    out
}

fn effect(e: &Effect) -> String {
    match e {
        Effect::Add(p) => pred(p),
        Effect::Del(p) => format!("(not {})", pred(p)),
        Effect::Assign { target, value } => format!("(assign {} {})", fluent(target), expr(value)),
        Effect::Increase { target, value } => {
            format!("(increase {} {})", fluent(target), expr(value))
        }
        Effect::Decrease { target, value } => {
            format!("(decrease {} {})", fluent(target), expr(value))
        }
        Effect::Attached { name, targets } => {
            let mut out = format!("(attached {name}");
            for t in targets {
                out.push(' ');
                out.push_str(&fluent(t));
            }
            out.push(')');
            out
        }
    }
}

fn effects(es: &[Effect]) -> String {
    let mut out = String::from("(and");
    for e in es {
        out.push(' ');
        out.push_str(&effect(e));
    }
    out.push(')');
    out
}

fn rate_effects(es: &[RateEffect]) -> String {
    let mut out = String::from("(and");
    for e in es {
        let verb = if e.increase { "increase" } else { "decrease" };
        let _ = write!(out, " ({verb} {} (* #t {}))", fluent(&e.target), expr(&e.rate));
    }
    out.push(')');
    out
}

pub fn print_domain(d: &DomainModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (domain {})", d.name);
    if !d.requirements.is_empty() {
        let reqs: Vec<String> = d.requirements.iter().map(|r| format!(":{r}")).collect();
        let _ = writeln!(out, "  (:requirements {})", reqs.join(" "));
    }
    if !d.types.is_empty() {
        let _ = writeln!(out, "  (:types {})", d.types.join(" "));
    }
    if !d.predicates.is_empty() {
        let _ = writeln!(out, "  (:predicates");
        for p in &d.predicates {
            if p.params.is_empty() {
                let _ = writeln!(out, "    ({})", p.name);
            } else {
                let _ = writeln!(out, "    ({} {})", p.name, params(&p.params));
            }
        }
        let _ = writeln!(out, "  )");
    }
    if !d.functions.is_empty() {
        let _ = writeln!(out, "  (:functions");
        for f in &d.functions {
            if f.params.is_empty() {
                let _ = writeln!(out, "    ({})", f.name);
            } else {
                let _ = writeln!(out, "    ({} {})", f.name, params(&f.params));
            }
        }
        let _ = writeln!(out, "  )");
    }
    for a in &d.actions {
        let _ = writeln!(out, "  (:action {}", a.name);
        let _ = writeln!(out, "    :parameters ({})", params(&a.params));
        let _ = writeln!(out, "    :precondition {}", conditions(&a.precondition));
        let _ = writeln!(out, "    :effect {}", effects(&a.effects));
        let _ = writeln!(out, "  )");
    }
    for pr in &d.processes {
        let _ = writeln!(out, "  (:process {}", pr.name);
        let _ = writeln!(out, "    :parameters ({})", params(&pr.params));
        let _ = writeln!(out, "    :precondition {}", conditions(&pr.precondition));
        let _ = writeln!(out, "    :effect {}", rate_effects(&pr.effects));
        let _ = writeln!(out, "  )");
    }
    for ev in &d.events {
        let _ = writeln!(out, "  (:event {}", ev.name);
        let _ = writeln!(out, "    :parameters ({})", params(&ev.params));
        let _ = writeln!(out, "    :precondition {}", conditions(&ev.precondition));
        let _ = writeln!(out, "    :effect {}", effects(&ev.effects));
        let _ = writeln!(out, "  )");
    }
    out.push_str(")\n");
    out
}

pub fn print_problem(p: &ProblemModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (problem {})", p.name);
    let _ = writeln!(out, "  (:domain {})", p.domain);
    if !p.objects.is_empty() {
        let mut line = String::new();
        let mut i = 0;
        while i < p.objects.len() {
            let mut j = i;
            while j + 1 < p.objects.len() && p.objects[j + 1].1 == p.objects[i].1 {
                j += 1;
            }
            if !line.is_empty() {
                line.push(' ');
            }
            for (name, _) in &p.objects[i..=j] {
                let _ = write!(line, "{name} ");
            }
            let _ = write!(line, "- {}", p.objects[i].1);
            i = j + 1;
        }
        let _ = writeln!(out, "  (:objects {line})");
    }
    let _ = writeln!(out, "  (:init");
    for l in &p.init_literals {
        let _ = writeln!(out, "    {}", pred(l));
    }
    for (f, v) in &p.init_fluents {
        let _ = writeln!(out, "    (= {} {})", fluent(f), num(*v));
    }
    let _ = writeln!(out, "  )");
    let _ = writeln!(out, "  (:goal {})", conditions(&p.goal));
    out.push_str(")\n");
    out
}

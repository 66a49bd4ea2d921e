//! Recursive-descent parser for the planning-language subset.
//!
//! The accepted grammar is deliberately closed: sections outside it fail
//! with an error that names the unsupported feature rather than being
//! skipped, and symbol references are checked against declarations as they
//! are parsed so diagnostics carry the exact source position.

use std::collections::BTreeMap;

use super::ast::*;
use super::lexer::{lex, Tok, TokKind};
use super::PddlError;

/// Requirement flags the subset honors; anything else is rejected by name.
const SUPPORTED_REQUIREMENTS: &[&str] = &[
    "strips",
    "typing",
    "fluents",
    "numeric-fluents",
    "negative-preconditions",
    "time",
    "processes",
    "events",
];

/// Features recognized well enough to reject with a specific message.
const KNOWN_UNSUPPORTED: &[&str] = &[
    "durative-action",
    "durative-actions",
    "constraints",
    "constants",
    "derived",
    "metric",
    "duration",
];

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

struct DomainSymbols {
    types: Vec<String>,
    predicates: BTreeMap<String, usize>,
    functions: BTreeMap<String, usize>,
}

/// What identifiers terms may resolve against: operator parameters inside a
/// domain, declared objects inside a problem.
enum TermScope<'a> {
    Params(&'a BTreeMap<String, String>),
    Objects(&'a BTreeMap<String, String>),
}

impl Parser {
    fn new(text: &str) -> Result<Self, PddlError> {
        Ok(Parser { toks: lex(text)?, pos: 0 })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Result<&Tok, PddlError> {
        let t = self.toks.get(self.pos).ok_or_else(|| PddlError::Syntax {
            line: self.last_line(),
            col: self.last_col(),
            msg: "unexpected end of input".into(),
        })?;
        self.pos += 1;
        Ok(t)
    }

    fn last_line(&self) -> usize {
        self.toks.last().map(|t| t.line).unwrap_or(1)
    }

    fn last_col(&self) -> usize {
        self.toks.last().map(|t| t.col).unwrap_or(1)
    }

    fn err_at(&self, tok: Option<&Tok>, msg: String) -> PddlError {
        match tok {
            Some(t) => PddlError::Syntax { line: t.line, col: t.col, msg },
            None => PddlError::Syntax { line: self.last_line(), col: self.last_col(), msg },
        }
    }

    fn expect_lparen(&mut self) -> Result<(), PddlError> {
        let t = self.next()?;
        if t.kind == TokKind::LParen {
            Ok(())
        } else {
            Err(PddlError::Syntax {
                line: t.line,
                col: t.col,
                msg: format!("expected '(', found {}", describe(&t.kind)),
            })
        }
    }

    fn expect_rparen(&mut self) -> Result<(), PddlError> {
        let t = self.next()?;
        if t.kind == TokKind::RParen {
            Ok(())
        } else {
            Err(PddlError::Syntax {
                line: t.line,
                col: t.col,
                msg: format!("expected ')', found {}", describe(&t.kind)),
            })
        }
    }

    fn expect_sym(&mut self, want: &str) -> Result<(), PddlError> {
        let t = self.next()?;
        match &t.kind {
            TokKind::Sym(s) if s == want => Ok(()),
            other => Err(PddlError::Syntax {
                line: t.line,
                col: t.col,
                msg: format!("expected '{want}', found {}", describe(other)),
            }),
        }
    }

    fn take_sym(&mut self) -> Result<(String, usize, usize), PddlError> {
        let t = self.next()?;
        match &t.kind {
            TokKind::Sym(s) => Ok((s.clone(), t.line, t.col)),
            other => Err(PddlError::Syntax {
                line: t.line,
                col: t.col,
                msg: format!("expected a name, found {}", describe(other)),
            }),
        }
    }

    fn at_rparen(&self) -> bool {
        matches!(self.peek().map(|t| &t.kind), Some(TokKind::RParen))
    }

    /// `?a ?b - t1 ?c - t2` style typed lists; every group must carry a type
    /// drawn from the declared set.
    fn parse_typed_params(&mut self, types: &[String]) -> Result<Vec<Param>, PddlError> {
        let mut out = Vec::new();
        let mut pending: Vec<String> = Vec::new();
        let mut pending_pos: Vec<(usize, usize)> = Vec::new();
        loop {
            if self.at_rparen() {
                break;
            }
            let t = self.next()?;
            match &t.kind {
                TokKind::Var(v) => {
                    pending.push(v.clone());
                    pending_pos.push((t.line, t.col));
                }
                TokKind::Sym(s) if s == "-" => {
                    let (line, col) = (t.line, t.col);
                    let (ty, tl, tc) = self.take_sym()?;
                    if !types.iter().any(|d| *d == ty) {
                        return Err(PddlError::Undeclared {
                            line: tl,
                            col: tc,
                            kind: "type",
                            name: ty,
                        });
                    }
                    if pending.is_empty() {
                        return Err(PddlError::Syntax {
                            line,
                            col,
                            msg: "dangling '-' with no variables before it".into(),
                        });
                    }
                    for name in pending.drain(..) {
                        out.push(Param { name, ty: ty.clone() });
                    }
                    pending_pos.clear();
                }
                other => {
                    return Err(PddlError::Syntax {
                        line: t.line,
                        col: t.col,
                        msg: format!("expected '?variable' or '- type', found {}", describe(other)),
                    })
                }
            }
        }
        if let (Some(name), Some(&(line, col))) = (pending.first(), pending_pos.first()) {
            return Err(PddlError::Syntax {
                line,
                col,
                msg: format!("parameter ?{name} is missing a '- type' annotation"),
            });
        }
        self.expect_rparen()?;
        Ok(out)
    }

    fn parse_term(&mut self, scope: &TermScope) -> Result<Term, PddlError> {
        let t = self.next()?;
        match (&t.kind, scope) {
            (TokKind::Var(v), TermScope::Params(params)) => {
                if params.contains_key(v) {
                    Ok(Term::Var(v.clone()))
                } else {
                    Err(PddlError::Undeclared {
                        line: t.line,
                        col: t.col,
                        kind: "parameter",
                        name: format!("?{v}"),
                    })
                }
            }
            (TokKind::Var(v), TermScope::Objects(_)) => Err(PddlError::Syntax {
                line: t.line,
                col: t.col,
                msg: format!("variable ?{v} is not allowed in a problem; terms must be objects"),
            }),
            (TokKind::Sym(s), TermScope::Objects(objects)) => {
                if objects.contains_key(s) {
                    Ok(Term::Obj(s.clone()))
                } else {
                    Err(PddlError::Undeclared {
                        line: t.line,
                        col: t.col,
                        kind: "object",
                        name: s.clone(),
                    })
                }
            }
            (TokKind::Sym(s), TermScope::Params(_)) => Err(PddlError::Undeclared {
                line: t.line,
                col: t.col,
                kind: "parameter",
                name: s.clone(),
            }),
            (other, _) => Err(PddlError::Syntax {
                line: t.line,
                col: t.col,
                msg: format!("expected a term, found {}", describe(other)),
            }),
        }
    }

    /// Parses `name term*` after the opening paren, checking declaration and
    /// arity. `decls` picks which table the name must live in.
    fn parse_ref(
        &mut self,
        decls: &BTreeMap<String, usize>,
        kind: &'static str,
        scope: &TermScope,
    ) -> Result<(String, Vec<Term>), PddlError> {
        let (name, line, col) = self.take_sym()?;
        let arity = *decls.get(&name).ok_or(PddlError::Undeclared {
            line,
            col,
            kind,
            name: name.clone(),
        })?;
        let mut args = Vec::new();
        while !self.at_rparen() {
            args.push(self.parse_term(scope)?);
        }
        self.expect_rparen()?;
        if args.len() != arity {
            return Err(PddlError::Arity {
                line,
                col,
                name,
                expected: arity,
                found: args.len(),
            });
        }
        Ok((name, args))
    }

    fn parse_expr(&mut self, syms: &DomainSymbols, scope: &TermScope) -> Result<Expr, PddlError> {
        let t = self.next()?.clone();
        match &t.kind {
            TokKind::Num(n) => Ok(Expr::Num(*n)),
            TokKind::LParen => {
                let head = self.next()?.clone();
                match &head.kind {
                    TokKind::Sym(op) if ["+", "-", "*", "/"].contains(&op.as_str()) => {
                        let op = op.clone();
                        let mut operands = Vec::new();
                        while !self.at_rparen() {
                            operands.push(self.parse_expr(syms, scope)?);
                        }
                        self.expect_rparen()?;
                        combine(&op, operands).map_err(|msg| self.err_at(Some(&head), msg))
                    }
                    TokKind::Sym(name) => {
                        // a fluent reference: rewind past the name and reuse parse_ref
                        self.pos -= 1;
                        let (name2, args) = self.parse_ref(&syms.functions, "function", scope)?;
                        debug_assert_eq!(*name, name2);
                        Ok(Expr::Fluent(FluentRef { name: name2, args }))
                    }
                    TokKind::TimeVar => Err(PddlError::Syntax {
                        line: head.line,
                        col: head.col,
                        msg: "#t may only appear as (* #t expr) in a process effect".into(),
                    }),
                    other => Err(PddlError::Syntax {
                        line: head.line,
                        col: head.col,
                        msg: format!("expected an operator or fluent, found {}", describe(other)),
                    }),
                }
            }
            TokKind::TimeVar => Err(PddlError::Syntax {
                line: t.line,
                col: t.col,
                msg: "#t may only appear as (* #t expr) in a process effect".into(),
            }),
            other => Err(PddlError::Syntax {
                line: t.line,
                col: t.col,
                msg: format!("expected an expression, found {}", describe(other)),
            }),
        }
    }

    /// One condition after its opening paren has been consumed and the head
    /// token peeked: literal, negated literal, or comparison.
    fn parse_condition_body(
        &mut self,
        syms: &DomainSymbols,
        scope: &TermScope,
    ) -> Result<Condition, PddlError> {
        let head = self.next()?.clone();
        match &head.kind {
            TokKind::Sym(s) if s == "not" => {
                self.expect_lparen()?;
                let (name, args) = self.parse_ref(&syms.predicates, "predicate", scope)?;
                self.expect_rparen()?;
                Ok(Condition::Literal { positive: false, pred: PredRef { name, args } })
            }
            TokKind::Sym(s) if ["<", "<=", ">", ">=", "="].contains(&s.as_str()) => {
                let op = match s.as_str() {
                    "<" => CmpOp::Lt,
                    "<=" => CmpOp::Le,
                    ">" => CmpOp::Gt,
                    ">=" => CmpOp::Ge,
                    _ => CmpOp::Eq,
                };
                let lhs = self.parse_expr(syms, scope)?;
                let rhs = self.parse_expr(syms, scope)?;
                self.expect_rparen()?;
                Ok(Condition::Compare { op, lhs, rhs })
            }
            TokKind::Sym(s) if ["or", "imply", "forall", "exists", "when"].contains(&s.as_str()) => {
                Err(PddlError::Unsupported {
                    line: head.line,
                    col: head.col,
                    feature: format!("{s} conditions"),
                })
            }
            TokKind::Sym(_) => {
                self.pos -= 1;
                let (name, args) = self.parse_ref(&syms.predicates, "predicate", scope)?;
                Ok(Condition::Literal { positive: true, pred: PredRef { name, args } })
            }
            other => Err(PddlError::Syntax {
                line: head.line,
                col: head.col,
                msg: format!("expected a condition, found {}", describe(other)),
            }),
        }
    }

    /// `(and c*)` or a single condition.
    fn parse_condition_set(
        &mut self,
        syms: &DomainSymbols,
        scope: &TermScope,
    ) -> Result<Vec<Condition>, PddlError> {
        self.expect_lparen()?;
        if let Some(Tok { kind: TokKind::Sym(s), .. }) = self.peek() {
            if s == "and" {
                self.next()?;
                let mut out = Vec::new();
                while !self.at_rparen() {
                    self.expect_lparen()?;
                    out.push(self.parse_condition_body(syms, scope)?);
                }
                self.expect_rparen()?;
                return Ok(out);
            }
        }
        Ok(vec![self.parse_condition_body(syms, scope)?])
    }

    /// One instantaneous effect after its opening paren has been consumed.
    fn parse_effect_body(
        &mut self,
        syms: &DomainSymbols,
        scope: &TermScope,
        allow_attached: bool,
    ) -> Result<Effect, PddlError> {
        let head = self.next()?.clone();
        match &head.kind {
            TokKind::Sym(s) if s == "not" => {
                self.expect_lparen()?;
                let (name, args) = self.parse_ref(&syms.predicates, "predicate", scope)?;
                self.expect_rparen()?;
                Ok(Effect::Del(PredRef { name, args }))
            }
            TokKind::Sym(s) if ["assign", "increase", "decrease"].contains(&s.as_str()) => {
                let kind = s.clone();
                self.expect_lparen()?;
                let (name, args) = self.parse_ref(&syms.functions, "function", scope)?;
                let target = FluentRef { name, args };
                let value = self.parse_expr(syms, scope)?;
                self.expect_rparen()?;
                Ok(match kind.as_str() {
                    "assign" => Effect::Assign { target, value },
                    "increase" => Effect::Increase { target, value },
                    _ => Effect::Decrease { target, value },
                })
            }
            TokKind::Sym(s) if s == "attached" => {
                if !allow_attached {
                    return Err(PddlError::Syntax {
                        line: head.line,
                        col: head.col,
                        msg: "(attached ...) effects are only allowed in events".into(),
                    });
                }
                let (name, _, _) = self.take_sym()?;
                let mut targets = Vec::new();
                while !self.at_rparen() {
                    self.expect_lparen()?;
                    let (fname, args) = self.parse_ref(&syms.functions, "function", scope)?;
                    targets.push(FluentRef { name: fname, args });
                }
                self.expect_rparen()?;
                if targets.is_empty() {
                    return Err(PddlError::Syntax {
                        line: head.line,
                        col: head.col,
                        msg: format!("attached effect '{name}' lists no target fluents"),
                    });
                }
                Ok(Effect::Attached { name, targets })
            }
            TokKind::Sym(s) if ["when", "forall"].contains(&s.as_str()) => {
                Err(PddlError::Unsupported {
                    line: head.line,
                    col: head.col,
                    feature: format!("{s} effects"),
                })
            }
            TokKind::Sym(_) => {
                self.pos -= 1;
                let (name, args) = self.parse_ref(&syms.predicates, "predicate", scope)?;
                Ok(Effect::Add(PredRef { name, args }))
            }
            other => Err(PddlError::Syntax {
                line: head.line,
                col: head.col,
                msg: format!("expected an effect, found {}", describe(other)),
            }),
        }
    }

    fn parse_effect_set(
        &mut self,
        syms: &DomainSymbols,
        scope: &TermScope,
        allow_attached: bool,
    ) -> Result<Vec<Effect>, PddlError> {
        self.expect_lparen()?;
        if let Some(Tok { kind: TokKind::Sym(s), .. }) = self.peek() {
            if s == "and" {
                self.next()?;
                let mut out = Vec::new();
                while !self.at_rparen() {
                    self.expect_lparen()?;
                    out.push(self.parse_effect_body(syms, scope, allow_attached)?);
                }
                self.expect_rparen()?;
                return Ok(out);
            }
        }
        Ok(vec![self.parse_effect_body(syms, scope, allow_attached)?])
    }

    /// Process effects: `(increase|decrease (f terms) (* #t expr))`.
    fn parse_rate_effects(
        &mut self,
        syms: &DomainSymbols,
        scope: &TermScope,
    ) -> Result<Vec<RateEffect>, PddlError> {
        self.expect_lparen()?;
        let mut singles = Vec::new();
        if let Some(Tok { kind: TokKind::Sym(s), .. }) = self.peek() {
            if s == "and" {
                self.next()?;
                while !self.at_rparen() {
                    self.expect_lparen()?;
                    singles.push(self.parse_rate_effect_body(syms, scope)?);
                }
                self.expect_rparen()?;
                return Ok(singles);
            }
        }
        Ok(vec![self.parse_rate_effect_body(syms, scope)?])
    }

    fn parse_rate_effect_body(
        &mut self,
        syms: &DomainSymbols,
        scope: &TermScope,
    ) -> Result<RateEffect, PddlError> {
        let head = self.next()?.clone();
        let increase = match &head.kind {
            TokKind::Sym(s) if s == "increase" => true,
            TokKind::Sym(s) if s == "decrease" => false,
            other => {
                return Err(PddlError::Syntax {
                    line: head.line,
                    col: head.col,
                    msg: format!(
                        "process effects must be (increase ...) or (decrease ...), found {}",
                        describe(other)
                    ),
                })
            }
        };
        self.expect_lparen()?;
        let (name, args) = self.parse_ref(&syms.functions, "function", scope)?;
        let target = FluentRef { name, args };
        // the rate must be written (* #t expr)
        self.expect_lparen()?;
        self.expect_sym("*")?;
        let t = self.next()?;
        if t.kind != TokKind::TimeVar {
            return Err(PddlError::Syntax {
                line: t.line,
                col: t.col,
                msg: format!("process rates must be written (* #t expr), found {}", describe(&t.kind)),
            });
        }
        let rate = self.parse_expr(syms, scope)?;
        self.expect_rparen()?;
        self.expect_rparen()?;
        Ok(RateEffect { target, increase, rate })
    }
}

fn combine(op: &str, operands: Vec<Expr>) -> Result<Expr, String> {
    match (op, operands.len()) {
        ("-", 1) => {
            let mut it = operands.into_iter();
            Ok(Expr::Neg(Box::new(it.next().unwrap())))
        }
        ("-", 2) => {
            let mut it = operands.into_iter();
            Ok(Expr::Sub(Box::new(it.next().unwrap()), Box::new(it.next().unwrap())))
        }
        ("/", 2) => {
            let mut it = operands.into_iter();
            Ok(Expr::Div(Box::new(it.next().unwrap()), Box::new(it.next().unwrap())))
        }
        ("+", n) if n >= 2 => {
            let mut it = operands.into_iter();
            let first = it.next().unwrap();
            Ok(it.fold(first, |acc, e| Expr::Add(Box::new(acc), Box::new(e))))
        }
        ("*", n) if n >= 2 => {
            let mut it = operands.into_iter();
            let first = it.next().unwrap();
            Ok(it.fold(first, |acc, e| Expr::Mul(Box::new(acc), Box::new(e))))
        }
        (op, n) => Err(format!("operator '{op}' does not take {n} operand(s)")),
    }
}

fn describe(kind: &TokKind) -> String {
    match kind {
        TokKind::LParen => "'('".into(),
        TokKind::RParen => "')'".into(),
        TokKind::Sym(s) => format!("'{s}'"),
        TokKind::Var(v) => format!("'?{v}'"),
        TokKind::Key(k) => format!("':{k}'"),
        TokKind::Num(n) => format!("number {n}"),
        TokKind::TimeVar => "'#t'".into(),
    }
}

fn params_map(params: &[Param]) -> BTreeMap<String, String> {
    params.iter().map(|p| (p.name.clone(), p.ty.clone())).collect()
}

/// Parse a domain file. Sections must appear in the canonical order
/// (requirements, types, predicates, functions, then operators) so that
/// every reference is validated against an already-seen declaration.
pub fn parse_domain(text: &str) -> Result<DomainModel, PddlError> {
    let mut p = Parser::new(text)?;
    p.expect_lparen()?;
    p.expect_sym("define")?;
    p.expect_lparen()?;
    p.expect_sym("domain")?;
    let (name, _, _) = p.take_sym()?;
    p.expect_rparen()?;

    let mut model = DomainModel {
        name,
        requirements: Vec::new(),
        types: Vec::new(),
        predicates: Vec::new(),
        functions: Vec::new(),
        actions: Vec::new(),
        processes: Vec::new(),
        events: Vec::new(),
    };
    let mut syms = DomainSymbols {
        types: Vec::new(),
        predicates: BTreeMap::new(),
        functions: BTreeMap::new(),
    };
    // canonical section order: each stage may only advance
    let mut stage = 0u8;
    let mut advance = |want: u8, tok: &Tok, what: &str| -> Result<(), PddlError> {
        if want < stage {
            return Err(PddlError::Syntax {
                line: tok.line,
                col: tok.col,
                msg: format!(
                    "{what} section out of order; expected requirements, types, predicates, functions, then operators"
                ),
            });
        }
        stage = want;
        Ok(())
    };

    loop {
        if p.at_rparen() {
            p.next()?;
            break;
        }
        p.expect_lparen()?;
        let head = p.next()?.clone();
        let key = match &head.kind {
            TokKind::Key(k) => k.clone(),
            other => {
                return Err(PddlError::Syntax {
                    line: head.line,
                    col: head.col,
                    msg: format!("expected a ':section' keyword, found {}", describe(other)),
                })
            }
        };
        match key.as_str() {
            "requirements" => {
                advance(1, &head, ":requirements")?;
                while !p.at_rparen() {
                    let t = p.next()?;
                    match &t.kind {
                        TokKind::Key(r) if SUPPORTED_REQUIREMENTS.contains(&r.as_str()) => {
                            model.requirements.push(r.clone());
                        }
                        TokKind::Key(r) => {
                            return Err(PddlError::Unsupported {
                                line: t.line,
                                col: t.col,
                                feature: format!(":{r}"),
                            })
                        }
                        other => {
                            return Err(PddlError::Syntax {
                                line: t.line,
                                col: t.col,
                                msg: format!("expected a ':requirement', found {}", describe(other)),
                            })
                        }
                    }
                }
                p.next()?;
            }
            "types" => {
                advance(2, &head, ":types")?;
                while !p.at_rparen() {
                    let t = p.next()?;
                    match &t.kind {
                        TokKind::Sym(s) if s == "-" => {
                            return Err(PddlError::Unsupported {
                                line: t.line,
                                col: t.col,
                                feature: "type hierarchies".into(),
                            })
                        }
                        TokKind::Sym(s) => {
                            if syms.types.iter().any(|d| d == s) {
                                return Err(PddlError::Syntax {
                                    line: t.line,
                                    col: t.col,
                                    msg: format!("type '{s}' declared twice"),
                                });
                            }
                            syms.types.push(s.clone());
                            model.types.push(s.clone());
                        }
                        other => {
                            return Err(PddlError::Syntax {
                                line: t.line,
                                col: t.col,
                                msg: format!("expected a type name, found {}", describe(other)),
                            })
                        }
                    }
                }
                p.next()?;
            }
            "predicates" => {
                advance(3, &head, ":predicates")?;
                while !p.at_rparen() {
                    p.expect_lparen()?;
                    let (pname, line, col) = p.take_sym()?;
                    if syms.predicates.contains_key(&pname) {
                        return Err(PddlError::Syntax {
                            line,
                            col,
                            msg: format!("predicate '{pname}' declared twice"),
                        });
                    }
                    let params = p.parse_typed_params(&syms.types)?;
                    syms.predicates.insert(pname.clone(), params.len());
                    model.predicates.push(PredicateDecl { name: pname, params });
                }
                p.next()?;
            }
            "functions" => {
                advance(4, &head, ":functions")?;
                while !p.at_rparen() {
                    p.expect_lparen()?;
                    let (fname, line, col) = p.take_sym()?;
                    if syms.functions.contains_key(&fname) {
                        return Err(PddlError::Syntax {
                            line,
                            col,
                            msg: format!("function '{fname}' declared twice"),
                        });
                    }
                    let params = p.parse_typed_params(&syms.types)?;
                    syms.functions.insert(fname.clone(), params.len());
                    model.functions.push(FunctionDecl { name: fname, params });
                }
                p.next()?;
            }
            "action" | "process" | "event" => {
                advance(5, &head, "operator")?;
                let (oname, _, _) = p.take_sym()?;
                let t = p.next()?.clone();
                if !matches!(&t.kind, TokKind::Key(k) if k == "parameters") {
                    return Err(PddlError::Syntax {
                        line: t.line,
                        col: t.col,
                        msg: format!("expected ':parameters', found {}", describe(&t.kind)),
                    });
                }
                p.expect_lparen()?;
                let params = p.parse_typed_params(&syms.types)?;
                let pmap = params_map(&params);
                let scope = TermScope::Params(&pmap);

                let t = p.next()?.clone();
                if !matches!(&t.kind, TokKind::Key(k) if k == "precondition") {
                    return Err(PddlError::Syntax {
                        line: t.line,
                        col: t.col,
                        msg: format!("expected ':precondition', found {}", describe(&t.kind)),
                    });
                }
                let precondition = p.parse_condition_set(&syms, &scope)?;

                let t = p.next()?.clone();
                if !matches!(&t.kind, TokKind::Key(k) if k == "effect") {
                    return Err(PddlError::Syntax {
                        line: t.line,
                        col: t.col,
                        msg: format!("expected ':effect', found {}", describe(&t.kind)),
                    });
                }
                match key.as_str() {
                    "action" => {
                        let effects = p.parse_effect_set(&syms, &scope, false)?;
                        p.expect_rparen()?;
                        model.actions.push(ActionDef { name: oname, params, precondition, effects });
                    }
                    "process" => {
                        let effects = p.parse_rate_effects(&syms, &scope)?;
                        if effects.is_empty() {
                            return Err(PddlError::Syntax {
                                line: t.line,
                                col: t.col,
                                msg: format!("process '{oname}' has no rate effects"),
                            });
                        }
                        p.expect_rparen()?;
                        model.processes.push(ProcessDef { name: oname, params, precondition, effects });
                    }
                    _ => {
                        let effects = p.parse_effect_set(&syms, &scope, true)?;
                        p.expect_rparen()?;
                        model.events.push(EventDef { name: oname, params, precondition, effects });
                    }
                }
            }
            other if KNOWN_UNSUPPORTED.contains(&other) => {
                return Err(PddlError::Unsupported {
                    line: head.line,
                    col: head.col,
                    feature: format!(":{other}"),
                })
            }
            other => {
                return Err(PddlError::Unsupported {
                    line: head.line,
                    col: head.col,
                    feature: format!(":{other}"),
                })
            }
        }
    }
    if let Some(t) = p.peek() {
        return Err(PddlError::Syntax {
            line: t.line,
            col: t.col,
            msg: "trailing input after domain definition".into(),
        });
    }
    Ok(model)
}

/// Parse a problem file against its domain. Objects, initial state, and the
/// goal are validated for declaration, arity, and object types.
pub fn parse_problem(text: &str, domain: &DomainModel) -> Result<ProblemModel, PddlError> {
    let mut p = Parser::new(text)?;
    let syms = DomainSymbols {
        types: domain.types.clone(),
        predicates: domain.predicates.iter().map(|d| (d.name.clone(), d.params.len())).collect(),
        functions: domain.functions.iter().map(|d| (d.name.clone(), d.params.len())).collect(),
    };

    p.expect_lparen()?;
    p.expect_sym("define")?;
    p.expect_lparen()?;
    p.expect_sym("problem")?;
    let (name, _, _) = p.take_sym()?;
    p.expect_rparen()?;
    p.expect_lparen()?;
    let t = p.next()?.clone();
    if !matches!(&t.kind, TokKind::Key(k) if k == "domain") {
        return Err(PddlError::Syntax {
            line: t.line,
            col: t.col,
            msg: format!("expected '(:domain ...)', found {}", describe(&t.kind)),
        });
    }
    let (dname, dline, dcol) = p.take_sym()?;
    if dname != domain.name {
        return Err(PddlError::Syntax {
            line: dline,
            col: dcol,
            msg: format!("problem targets domain '{dname}' but '{}' was supplied", domain.name),
        });
    }
    p.expect_rparen()?;

    let mut objects: Vec<(String, String)> = Vec::new();
    let mut object_map: BTreeMap<String, String> = BTreeMap::new();
    let mut init_literals = Vec::new();
    let mut init_fluents = Vec::new();
    let mut goal = None;

    loop {
        if p.at_rparen() {
            p.next()?;
            break;
        }
        p.expect_lparen()?;
        let head = p.next()?.clone();
        let key = match &head.kind {
            TokKind::Key(k) => k.clone(),
            other => {
                return Err(PddlError::Syntax {
                    line: head.line,
                    col: head.col,
                    msg: format!("expected a ':section' keyword, found {}", describe(other)),
                })
            }
        };
        match key.as_str() {
            "objects" => {
                let mut pending: Vec<(String, usize, usize)> = Vec::new();
                while !p.at_rparen() {
                    let t = p.next()?.clone();
                    match &t.kind {
                        TokKind::Sym(s) if s == "-" => {
                            let (ty, tl, tc) = p.take_sym()?;
                            if !syms.types.iter().any(|d| *d == ty) {
                                return Err(PddlError::Undeclared {
                                    line: tl,
                                    col: tc,
                                    kind: "type",
                                    name: ty,
                                });
                            }
                            for (oname, ol, oc) in pending.drain(..) {
                                if object_map.contains_key(&oname) {
                                    return Err(PddlError::Syntax {
                                        line: ol,
                                        col: oc,
                                        msg: format!("object '{oname}' declared twice"),
                                    });
                                }
                                object_map.insert(oname.clone(), ty.clone());
                                objects.push((oname, ty.clone()));
                            }
                        }
                        TokKind::Sym(s) => pending.push((s.clone(), t.line, t.col)),
                        other => {
                            return Err(PddlError::Syntax {
                                line: t.line,
                                col: t.col,
                                msg: format!("expected an object name, found {}", describe(other)),
                            })
                        }
                    }
                }
                if let Some((oname, ol, oc)) = pending.first() {
                    return Err(PddlError::Syntax {
                        line: *ol,
                        col: *oc,
                        msg: format!("object '{oname}' is missing a '- type' annotation"),
                    });
                }
                p.next()?;
            }
            "init" => {
                let scope = TermScope::Objects(&object_map);
                while !p.at_rparen() {
                    p.expect_lparen()?;
                    let t = p.next()?.clone();
                    match &t.kind {
                        TokKind::Sym(s) if s == "=" => {
                            p.expect_lparen()?;
                            let (fname, args) = p.parse_ref(&syms.functions, "function", &scope)?;
                            let v = p.next()?.clone();
                            let value = match v.kind {
                                TokKind::Num(n) => n,
                                other => {
                                    return Err(PddlError::Syntax {
                                        line: v.line,
                                        col: v.col,
                                        msg: format!(
                                            "initial fluent values must be numbers, found {}",
                                            describe(&other)
                                        ),
                                    })
                                }
                            };
                            p.expect_rparen()?;
                            init_fluents.push((FluentRef { name: fname, args }, value));
                        }
                        TokKind::Sym(s) if s == "at" => {
                            return Err(PddlError::Unsupported {
                                line: t.line,
                                col: t.col,
                                feature: "timed initial literals".into(),
                            })
                        }
                        TokKind::Sym(_) => {
                            p.pos -= 1;
                            let (pname, args) = p.parse_ref(&syms.predicates, "predicate", &scope)?;
                            init_literals.push(PredRef { name: pname, args });
                        }
                        other => {
                            return Err(PddlError::Syntax {
                                line: t.line,
                                col: t.col,
                                msg: format!("expected an init element, found {}", describe(other)),
                            })
                        }
                    }
                }
                p.next()?;
            }
            "goal" => {
                let scope = TermScope::Objects(&object_map);
                goal = Some(p.parse_condition_set(&syms, &scope)?);
                p.expect_rparen()?;
            }
            other if KNOWN_UNSUPPORTED.contains(&other) => {
                return Err(PddlError::Unsupported {
                    line: head.line,
                    col: head.col,
                    feature: format!(":{other}"),
                })
            }
            other => {
                return Err(PddlError::Unsupported {
                    line: head.line,
                    col: head.col,
                    feature: format!(":{other}"),
                })
            }
        }
    }
    if let Some(t) = p.peek() {
        return Err(PddlError::Syntax {
            line: t.line,
            col: t.col,
            msg: "trailing input after problem definition".into(),
        });
    }
    let goal = goal.ok_or(PddlError::Syntax {
        line: p.last_line(),
        col: p.last_col(),
        msg: "problem has no (:goal ...) section".into(),
    })?;
    Ok(ProblemModel { name, domain: dname, objects, init_literals, init_fluents, goal })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MOTION_FRAGMENT: &str = r#"
(define (domain robot-navigation-fragment)
  (:requirements :typing :fluents :negative-preconditions :time :processes :events)
  (:types waypoint)
  (:predicates
    (robot_at ?wp - waypoint)
    (connected ?from ?to - waypoint)
    (moving ?from ?to - waypoint)
    (idle))
  (:functions
    (distance ?from ?to - waypoint)
    (d ?from ?to - waypoint)
    (dfactor)
    (counter)
    (trace_sigma))
  (:action goto_waypoint
    :parameters (?from ?to - waypoint)
    :precondition (and (robot_at ?from) (connected ?from ?to) (idle))
    :effect (and (not (idle)) (moving ?from ?to) (assign (d ?from ?to) (distance ?from ?to))))
  (:process odometry
    :parameters (?from ?to - waypoint)
    :precondition (and (moving ?from ?to) (connected ?from ?to) (> (d ?from ?to) 0))
    :effect (and (decrease (d ?from ?to) (* #t (dfactor))) (increase (counter) (* #t 1))))
  (:event belief_update
    :parameters ()
    :precondition (and (> (counter) 0))
    :effect (and (assign (counter) 0) (attached belief_update (trace_sigma)))))
"#;

    const BATTERY_EXTENSION: &str = r#"
(define (domain battery-fragment)
  (:requirements :typing :fluents :negative-preconditions :time :processes :events)
  (:types waypoint)
  (:predicates (battery_down))
  (:functions (charge))
  (:process discharge
    :parameters ()
    :precondition (and (not (battery_down)))
    :effect (and (decrease (charge) (* #t (* 0.11 (- 101 (charge)))))))
  (:event battery_status
    :parameters ()
    :precondition (and (<= (charge) 20) (not (battery_down)))
    :effect (and (battery_down))))
"#;

    #[test]
    fn motion_fragment_parses() {
        let d = parse_domain(MOTION_FRAGMENT).unwrap();
        assert_eq!(d.name, "robot-navigation-fragment");
        assert_eq!(d.actions.len(), 1);
        assert_eq!(d.processes.len(), 1);
        assert_eq!(d.events.len(), 1);
        assert_eq!(d.actions[0].name, "goto_waypoint");
        assert_eq!(d.actions[0].params.len(), 2);
        assert_eq!(d.actions[0].precondition.len(), 3);
        // the process carries two rate effects, one decreasing, one increasing
        let pr = &d.processes[0];
        assert_eq!(pr.name, "odometry");
        assert!(!pr.effects[0].increase);
        assert!(pr.effects[1].increase);
        assert_eq!(pr.effects[1].rate, Expr::Num(1.0));
        // the event binds an attachment to the trace fluent
        let ev = &d.events[0];
        assert!(matches!(
            &ev.effects[1],
            Effect::Attached { name, targets } if name == "belief_update" && targets.len() == 1
        ));
    }

    #[test]
    fn battery_extension_parses() {
        let d = parse_domain(BATTERY_EXTENSION).unwrap();
        assert_eq!(d.processes.len(), 1);
        assert_eq!(d.processes[0].name, "discharge");
        assert_eq!(d.events.len(), 1);
        assert_eq!(d.events[0].name, "battery_status");
        // the nonlinear drain rate: 0.11 * (101 - charge)
        let rate = &d.processes[0].effects[0].rate;
        let expected = Expr::Mul(
            Box::new(Expr::Num(0.11)),
            Box::new(Expr::Sub(
                Box::new(Expr::Num(101.0)),
                Box::new(Expr::Fluent(FluentRef { name: "charge".into(), args: vec![] })),
            )),
        );
        assert_eq!(rate, &expected);
    }

    #[test]
    fn empty_domain_parses() {
        let d = parse_domain("(define (domain d))").unwrap();
        assert_eq!(d.name, "d");
        assert!(d.actions.is_empty() && d.processes.is_empty() && d.events.is_empty());
        assert!(d.predicates.is_empty() && d.functions.is_empty());
    }

    #[test]
    fn durative_actions_rejected_by_name() {
        let text = r#"(define (domain d)
  (:durative-action move :parameters () :duration 5))"#;
        match parse_domain(text).unwrap_err() {
            PddlError::Unsupported { line, feature, .. } => {
                assert_eq!(line, 2);
                assert!(feature.contains("durative-action"), "feature = {feature}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unsupported_requirement_named() {
        let err = parse_domain("(define (domain d) (:requirements :typing :durative-actions))")
            .unwrap_err();
        assert!(matches!(err, PddlError::Unsupported { feature, .. } if feature == ":durative-actions"));
    }

    #[test]
    fn quantified_conditions_rejected() {
        let text = r#"(define (domain d)
  (:predicates (p))
  (:action a
    :parameters ()
    :precondition (forall (?x) (p))
    :effect (and (p))))"#;
        assert!(matches!(
            parse_domain(text).unwrap_err(),
            PddlError::Unsupported { feature, .. } if feature == "forall conditions"
        ));
    }

    #[test]
    fn undeclared_predicate_with_position() {
        let text = "(define (domain d)\n  (:predicates (p))\n  (:action a\n    :parameters ()\n    :precondition (and (q))\n    :effect (and (p))))";
        match parse_domain(text).unwrap_err() {
            PddlError::Undeclared { line, kind, name, .. } => {
                assert_eq!(line, 5);
                assert_eq!(kind, "predicate");
                assert_eq!(name, "q");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn arity_mismatch_reported() {
        let text = r#"(define (domain d)
  (:types t)
  (:predicates (p ?a ?b - t))
  (:action a
    :parameters (?x - t)
    :precondition (and (p ?x))
    :effect (and (p ?x ?x))))"#;
        assert!(matches!(
            parse_domain(text).unwrap_err(),
            PddlError::Arity { name, expected: 2, found: 1, .. } if name == "p"
        ));
    }

    #[test]
    fn undeclared_parameter_rejected() {
        let text = r#"(define (domain d)
  (:types t)
  (:predicates (p ?a - t))
  (:action a
    :parameters (?x - t)
    :precondition (and (p ?y))
    :effect (and (p ?x))))"#;
        assert!(matches!(
            parse_domain(text).unwrap_err(),
            PddlError::Undeclared { kind: "parameter", name, .. } if name == "?y"
        ));
    }

    #[test]
    fn sections_must_be_ordered() {
        let text = r#"(define (domain d)
  (:predicates (p))
  (:types t))"#;
        assert!(matches!(parse_domain(text).unwrap_err(), PddlError::Syntax { line: 3, .. }));
    }

    #[test]
    fn process_rates_must_scale_by_time() {
        let text = r#"(define (domain d)
  (:functions (f))
  (:process p
    :parameters ()
    :precondition (and (> (f) 0))
    :effect (and (decrease (f) (* 2 3)))))"#;
        match parse_domain(text).unwrap_err() {
            PddlError::Syntax { line, msg, .. } => {
                assert_eq!(line, 6);
                assert!(msg.contains("#t"), "msg = {msg}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn attached_effects_only_in_events() {
        let text = r#"(define (domain d)
  (:functions (f))
  (:action a
    :parameters ()
    :precondition (and)
    :effect (and (attached ext (f)))))"#;
        assert!(matches!(
            parse_domain(text).unwrap_err(),
            PddlError::Syntax { msg, .. } if msg.contains("only allowed in events")
        ));
    }

    #[test]
    fn type_hierarchies_rejected() {
        let err = parse_domain("(define (domain d) (:types a b - c))").unwrap_err();
        assert!(matches!(err, PddlError::Unsupported { feature, .. } if feature == "type hierarchies"));
    }

    #[test]
    fn problem_parses_and_validates() {
        let d = parse_domain(MOTION_FRAGMENT).unwrap();
        let p = parse_problem(
            r#"(define (problem corridor)
  (:domain robot-navigation-fragment)
  (:objects wp_start wp_goal - waypoint)
  (:init (robot_at wp_start) (idle) (= (counter) 0))
  (:goal (and (robot_at wp_goal))))"#,
            &d,
        )
        .unwrap();
        assert_eq!(p.name, "corridor");
        assert_eq!(p.objects.len(), 2);
        assert_eq!(p.init_literals.len(), 2);
        assert_eq!(p.init_fluents.len(), 1);
        assert_eq!(p.goal.len(), 1);
    }

    #[test]
    fn problem_domain_name_must_match() {
        let d = parse_domain(MOTION_FRAGMENT).unwrap();
        let err = parse_problem(
            "(define (problem x) (:domain other) (:goal (and)))",
            &d,
        )
        .unwrap_err();
        assert!(matches!(err, PddlError::Syntax { msg, .. } if msg.contains("other")));
    }

    #[test]
    fn problem_rejects_undeclared_object() {
        let d = parse_domain(MOTION_FRAGMENT).unwrap();
        let err = parse_problem(
            r#"(define (problem x)
  (:domain robot-navigation-fragment)
  (:objects wp_start - waypoint)
  (:init (robot_at wp_zzz))
  (:goal (and (robot_at wp_start))))"#,
            &d,
        )
        .unwrap_err();
        assert!(matches!(err, PddlError::Undeclared { kind: "object", name, .. } if name == "wp_zzz"));
    }

    #[test]
    fn problem_rejects_variables_and_timed_literals() {
        let d = parse_domain(MOTION_FRAGMENT).unwrap();
        let err = parse_problem(
            r#"(define (problem x)
  (:domain robot-navigation-fragment)
  (:objects wp_start - waypoint)
  (:init (robot_at ?w))
  (:goal (and)))"#,
            &d,
        )
        .unwrap_err();
        assert!(matches!(err, PddlError::Syntax { msg, .. } if msg.contains("not allowed in a problem")));
        let err = parse_problem(
            r#"(define (problem x)
  (:domain robot-navigation-fragment)
  (:objects wp_start - waypoint)
  (:init (at 5 (robot_at wp_start)))
  (:goal (and)))"#,
            &d,
        )
        .unwrap_err();
        assert!(matches!(err, PddlError::Unsupported { feature, .. } if feature == "timed initial literals"));
    }

    #[test]
    fn metric_sections_rejected() {
        let d = parse_domain(MOTION_FRAGMENT).unwrap();
        let err = parse_problem(
            r#"(define (problem x)
  (:domain robot-navigation-fragment)
  (:goal (and))
  (:metric minimize (total-time)))"#,
            &d,
        )
        .unwrap_err();
        assert!(matches!(err, PddlError::Unsupported { feature, .. } if feature == ":metric"));
    }

    #[test]
    fn nary_arithmetic_folds_left() {
        let text = r#"(define (domain d)
  (:functions (f) (g))
  (:action a
    :parameters ()
    :precondition (and (< (+ (f) (g) 1) 10))
    :effect (and (assign (f) 0))))"#;
        let d = parse_domain(text).unwrap();
        let Condition::Compare { lhs, .. } = &d.actions[0].precondition[0] else {
            panic!("expected comparison");
        };
        let f = Expr::Fluent(FluentRef { name: "f".into(), args: vec![] });
        let g = Expr::Fluent(FluentRef { name: "g".into(), args: vec![] });
        assert_eq!(
            lhs,
            &Expr::Add(Box::new(Expr::Add(Box::new(f), Box::new(g))), Box::new(Expr::Num(1.0)))
        );
    }
}

//! SMT-LIB 2 translation of unrolled programs.
//!
//! Each cell becomes a bounded integer constant and each statement a list of
//! assertions. Calls are inlined; their argument and result domains become
//! guard assertions under the same conditions as the call itself.

mod solve;

use std::collections::HashMap;
use std::fmt::Write;

use thiserror::Error;

use crate::frontend::ast::{BinOp, CmpOp, Expr, Stmt, StmtKind};
use crate::frontend::eval::{apply_binop, Symbols};
use crate::frontend::CheckedAst;
use crate::ir::{unroll, UExpr, UStmt, UnrollError};

pub use solve::{parse_model, solve_smt, SmtError, SmtOutcome, SmtStatus};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error("{0}")]
    Unroll(#[from] UnrollError),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("`{func}` expects {expected} arguments")]
    Arity { func: String, expected: usize },
    #[error("`{0}` cannot be used inside a function body")]
    Unsupported(String),
    #[error("function `{0}` can finish without returning")]
    NoReturn(String),
    #[error("product of two unbounded terms in `{0}`")]
    Nonlinear(String),
}

/// A translated integer term and, when known, an exclusive upper bound on
/// its value with 0 as lower bound.
#[derive(Debug, Clone)]
struct Term {
    text: String,
    bound: Option<usize>,
}

impl Term {
    fn plain(text: String) -> Term {
        Term { text, bound: None }
    }
}

fn int_lit(v: i64) -> String {
    if v < 0 {
        format!("(- {})", v.unsigned_abs())
    } else {
        v.to_string()
    }
}

fn conj(parts: &[String]) -> String {
    match parts.len() {
        0 => "true".into(),
        1 => parts[0].clone(),
        _ => format!("(and {})", parts.join(" ")),
    }
}

fn cmp_op(op: CmpOp, a: &str, b: &str) -> String {
    match op {
        CmpOp::Eq => format!("(= {a} {b})"),
        CmpOp::Ne => format!("(not (= {a} {b}))"),
        CmpOp::Lt => format!("(< {a} {b})"),
        CmpOp::Gt => format!("(> {a} {b})"),
        CmpOp::Le => format!("(<= {a} {b})"),
        CmpOp::Ge => format!("(>= {a} {b})"),
    }
}

struct Translator<'a> {
    syms: &'a Symbols,
    idents: &'a [String],
    domains: &'a [usize],
    /// Side conditions collected while translating one statement.
    guards: Vec<String>,
    func: String,
}

/// Local environment of an inlined function body.
type Env = Vec<(String, Term)>;

impl<'a> Translator<'a> {
    fn guard(&mut self, ctx: &[String], g: String) {
        if ctx.is_empty() {
            self.guards.push(g);
        } else {
            self.guards.push(format!("(=> {} {})", conj(ctx), g));
        }
    }

    fn int(&mut self, e: &UExpr, ctx: &[String]) -> Result<Term, TranslateError> {
        Ok(match e {
            UExpr::Int(v) => literal(*v),
            UExpr::Cell(c) => Term { text: self.idents[*c].clone(), bound: Some(self.domains[*c]) },
            UExpr::Call(f, args) => {
                let mut ts = Vec::new();
                for a in args {
                    ts.push(self.int(a, ctx)?);
                }
                self.call(f, ts, ctx)?
            }
            UExpr::Binary(op, a, b) => {
                let (a, b) = (self.int(a, ctx)?, self.int(b, ctx)?);
                self.binop(*op, a, b, ctx)?
            }
            UExpr::Compare(..) | UExpr::Not(_) | UExpr::And(..) | UExpr::Or(..) => {
                Term { text: format!("(ite {} 1 0)", self.boolean(e, ctx)?), bound: Some(2) }
            }
            UExpr::Cond { then, cond, otherwise } => {
                let c = self.boolean(cond, ctx)?;
                let mut tctx = ctx.to_vec();
                tctx.push(c.clone());
                let t = self.int(then, &tctx)?;
                let mut ectx = ctx.to_vec();
                ectx.push(format!("(not {c})"));
                let o = self.int(otherwise, &ectx)?;
                let bound = match (t.bound, o.bound) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    _ => None,
                };
                Term { text: format!("(ite {c} {} {})", t.text, o.text), bound }
            }
        })
    }

    fn boolean(&mut self, e: &UExpr, ctx: &[String]) -> Result<String, TranslateError> {
        Ok(match e {
            UExpr::Compare(op, a, b) => {
                let (a, b) = (self.int(a, ctx)?, self.int(b, ctx)?);
                cmp_op(*op, &a.text, &b.text)
            }
            UExpr::Not(a) => format!("(not {})", self.boolean(a, ctx)?),
            UExpr::And(a, b) => {
                let a = self.boolean(a, ctx)?;
                let mut bctx = ctx.to_vec();
                bctx.push(a.clone());
                format!("(and {a} {})", self.boolean(b, &bctx)?)
            }
            UExpr::Or(a, b) => {
                let a = self.boolean(a, ctx)?;
                let mut bctx = ctx.to_vec();
                bctx.push(format!("(not {a})"));
                format!("(or {a} {})", self.boolean(b, &bctx)?)
            }
            _ => format!("(not (= {} 0))", self.int(e, ctx)?.text),
        })
    }

    fn binop(&mut self, op: BinOp, a: Term, b: Term, ctx: &[String]) -> Result<Term, TranslateError> {
        let (x, y) = (&a.text, &b.text);
        let (aconst, bconst) = (const_of(x), const_of(y));
        if let (Some(p), Some(q)) = (aconst, bconst) {
            if let Ok(v) = apply_binop(op, p, q) {
                return Ok(literal(v));
            }
        }
        Ok(match op {
            BinOp::Add => Term {
                text: format!("(+ {x} {y})"),
                bound: a.bound.zip(b.bound).map(|(p, q)| p + q - 1),
            },
            BinOp::Sub => Term::plain(format!("(- {x} {y})")),
            BinOp::Mul => {
                if let Some(k) = aconst.or(bconst) {
                    let other = if aconst.is_some() { &b } else { &a };
                    let bound = match (k, other.bound) {
                        (k, Some(d)) if k >= 0 => Some((d - 1) * k as usize + 1),
                        _ => None,
                    };
                    Term { text: format!("(* {x} {y})"), bound }
                } else if let Some(d) = a.bound.or(b.bound) {
                    let bound = a.bound.zip(b.bound).map(|(p, q)| (p - 1) * (q - 1) + 1);
                    let text = if a.bound.is_some() { expand_product(x, d, y) } else { expand_product(y, d, x) };
                    Term { text, bound }
                } else {
                    return Err(TranslateError::Nonlinear(self.func.clone()));
                }
            }
            BinOp::Div | BinOp::Mod => match bconst {
                Some(d) if d > 0 => {
                    if op == BinOp::Div {
                        let bound = a.bound.map(|n| (n - 1) / d as usize + 1);
                        Term { text: format!("(div {x} {y})"), bound }
                    } else {
                        Term { text: format!("(mod {x} {y})"), bound: Some(d as usize) }
                    }
                }
                Some(d) if d < 0 => {
                    let n = int_lit(-d);
                    Term::plain(if op == BinOp::Div {
                        format!("(div (- {x}) {n})")
                    } else {
                        format!("(- (mod (- {x}) {n}))")
                    })
                }
                _ => {
                    self.guard(ctx, format!("(not (= {y} 0))"));
                    Term::plain(if op == BinOp::Div {
                        format!("(ite (> {y} 0) (div {x} {y}) (div (- {x}) (- {y})))")
                    } else {
                        format!("(ite (> {y} 0) (mod {x} {y}) (- (mod (- {x}) (- {y}))))")
                    })
                }
            },
        })
    }

    fn call(&mut self, name: &str, args: Vec<Term>, ctx: &[String]) -> Result<Term, TranslateError> {
        let f = self.syms.functions.get(name).ok_or_else(|| TranslateError::UnknownFunction(name.into()))?;
        if f.params.len() != args.len() {
            return Err(TranslateError::Arity { func: name.into(), expected: f.params.len() });
        }
        for (a, &d) in args.iter().zip(&f.in_domains) {
            if a.bound.is_some_and(|b| b <= d) {
                continue;
            }
            self.guard(ctx, format!("(and (>= {0} 0) (< {0} {d}))", a.text));
        }
        let env: Env = f
            .params
            .iter()
            .zip(args)
            .zip(&f.in_domains)
            .map(|((p, a), &d)| (p.clone(), Term { text: a.text, bound: Some(d) }))
            .collect();
        let saved = std::mem::replace(&mut self.func, name.to_string());
        let body = self.body(&[&f.body[..]], env, ctx)?;
        self.func = saved;
        let out = f.out_domain;
        if !body.bound.is_some_and(|b| b <= out) {
            self.guard(ctx, format!("(and (>= {0} 0) (< {0} {out}))", body.text));
        }
        Ok(Term { text: body.text, bound: Some(out) })
    }

    /// Translates the statement sequences in `frames` (innermost first) to
    /// the value they return.
    fn body(&mut self, frames: &[&[Stmt]], mut env: Env, ctx: &[String]) -> Result<Term, TranslateError> {
        let Some((first, outer)) = frames.split_first() else {
            return Err(TranslateError::NoReturn(self.func.clone()));
        };
        let Some((s, rest)) = first.split_first() else {
            return self.body(outer, env, ctx);
        };
        match &s.kind {
            StmtKind::Assign { name, value } => {
                let t = self.local(value, &env, ctx)?;
                env.push((name.clone(), t));
                let mut next = vec![rest];
                next.extend_from_slice(outer);
                self.body(&next, env, ctx)
            }
            StmtKind::Return(e) => self.local(e, &env, ctx),
            StmtKind::If { cond, then_body, else_body } => {
                let c = self.local_bool(cond, &env, ctx)?;
                let mut after = vec![rest];
                after.extend_from_slice(outer);
                let mut tframes = vec![&then_body[..]];
                tframes.extend_from_slice(&after);
                let mut eframes = vec![&else_body[..]];
                eframes.extend_from_slice(&after);
                let mut tctx = ctx.to_vec();
                tctx.push(c.clone());
                let t = self.body(&tframes, env.clone(), &tctx)?;
                let mut ectx = ctx.to_vec();
                ectx.push(format!("(not {c})"));
                let o = self.body(&eframes, env, &ectx)?;
                let bound = match (t.bound, o.bound) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    _ => None,
                };
                Ok(Term { text: format!("(ite {c} {} {})", t.text, o.text), bound })
            }
            _ => Err(TranslateError::Unsupported("statement".into())),
        }
    }

    fn local(&mut self, e: &Expr, env: &Env, ctx: &[String]) -> Result<Term, TranslateError> {
        Ok(match e {
            Expr::Int(v) => literal(*v),
            Expr::Name(n) => {
                if let Some((_, t)) = env.iter().rev().find(|(k, _)| k == n) {
                    t.clone()
                } else if let Some(v) = self.syms.consts.get(n) {
                    literal(*v)
                } else {
                    return Err(TranslateError::Unsupported(n.clone()));
                }
            }
            Expr::Index(n, _) => return Err(TranslateError::Unsupported(n.clone())),
            Expr::Call(f, args) => {
                let mut ts = Vec::new();
                for a in args {
                    ts.push(self.local(a, env, ctx)?);
                }
                self.call(f, ts, ctx)?
            }
            Expr::Binary(op, a, b) => {
                let (a, b) = (self.local(a, env, ctx)?, self.local(b, env, ctx)?);
                self.binop(*op, a, b, ctx)?
            }
            Expr::Compare(..) | Expr::Not(_) | Expr::And(..) | Expr::Or(..) => {
                Term { text: format!("(ite {} 1 0)", self.local_bool(e, env, ctx)?), bound: Some(2) }
            }
            Expr::Cond { then, cond, otherwise } => {
                let c = self.local_bool(cond, env, ctx)?;
                let mut tctx = ctx.to_vec();
                tctx.push(c.clone());
                let t = self.local(then, env, &tctx)?;
                let mut ectx = ctx.to_vec();
                ectx.push(format!("(not {c})"));
                let o = self.local(otherwise, env, &ectx)?;
                let bound = match (t.bound, o.bound) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    _ => None,
                };
                Term { text: format!("(ite {c} {} {})", t.text, o.text), bound }
            }
        })
    }

    fn local_bool(&mut self, e: &Expr, env: &Env, ctx: &[String]) -> Result<String, TranslateError> {
        Ok(match e {
            Expr::Compare(op, a, b) => {
                let (a, b) = (self.local(a, env, ctx)?, self.local(b, env, ctx)?);
                cmp_op(*op, &a.text, &b.text)
            }
            Expr::Not(a) => format!("(not {})", self.local_bool(a, env, ctx)?),
            Expr::And(a, b) => {
                let a = self.local_bool(a, env, ctx)?;
                let mut bctx = ctx.to_vec();
                bctx.push(a.clone());
                format!("(and {a} {})", self.local_bool(b, env, &bctx)?)
            }
            Expr::Or(a, b) => {
                let a = self.local_bool(a, env, ctx)?;
                let mut bctx = ctx.to_vec();
                bctx.push(format!("(not {a})"));
                format!("(or {a} {})", self.local_bool(b, env, &bctx)?)
            }
            _ => format!("(not (= {} 0))", self.local(e, env, ctx)?.text),
        })
    }

    fn stmt(&mut self, s: &UStmt, out: &mut Vec<String>) -> Result<(), TranslateError> {
        match s {
            UStmt::SetTo { target, value, .. } => {
                self.guards.clear();
                let v = self.int(value, &[])?;
                out.append(&mut self.guards);
                out.push(format!("(= {} {})", self.idents[*target], v.text));
            }
            UStmt::SetToConstant { target, value, .. } | UStmt::Observe { target, value, .. } => {
                out.push(format!("(= {} {})", self.idents[*target], int_lit(*value)));
            }
            UStmt::If { cell, value, then_body, else_body, .. } => {
                let c = format!("(= {} {})", self.idents[*cell], int_lit(*value));
                let mut t = Vec::new();
                for s in then_body {
                    self.stmt(s, &mut t)?;
                }
                let mut e = Vec::new();
                for s in else_body {
                    self.stmt(s, &mut e)?;
                }
                if !t.is_empty() {
                    out.push(format!("(=> {c} (and {}))", t.join(" ")));
                }
                if !e.is_empty() {
                    out.push(format!("(=> (not {c}) (and {}))", e.join(" ")));
                }
            }
        }
        Ok(())
    }
}

fn const_of(text: &str) -> Option<i64> {
    if let Some(inner) = text.strip_prefix("(- ").and_then(|t| t.strip_suffix(')')) {
        return inner.parse::<i64>().ok().map(|v| -v);
    }
    text.parse().ok()
}

fn literal(v: i64) -> Term {
    Term { text: int_lit(v), bound: (v >= 0).then(|| v as usize + 1) }
}

/// `a * b` for `0 <= a < d` as a sum of guarded multiples of `b`.
fn expand_product(a: &str, d: usize, b: &str) -> String {
    let terms: Vec<String> = (1..d)
        .map(|k| if k == 1 { format!("(ite (= {a} 1) {b} 0)") } else { format!("(ite (= {a} {k}) (* {k} {b}) 0)") })
        .collect();
    match terms.len() {
        0 => "0".into(),
        1 => terms[0].clone(),
        _ => format!("(+ {})", terms.join(" ")),
    }
}

/// A translated program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmtScript {
    pub logic: String,
    /// `(name, domain)` per cell, in cell order.
    pub consts: Vec<(String, usize)>,
    pub assertions: Vec<String>,
}

impl SmtScript {
    pub fn text(&self) -> String {
        let mut s = format!("(set-logic {})\n", self.logic);
        for (n, _) in &self.consts {
            writeln!(s, "(declare-const {n} Int)").unwrap();
        }
        for (n, d) in &self.consts {
            writeln!(s, "(assert (>= {n} 0))\n(assert (< {n} {d}))").unwrap();
        }
        for a in &self.assertions {
            writeln!(s, "(assert {a})").unwrap();
        }
        s.push_str("(check-sat)\n(get-model)\n");
        s
    }
}

/// Translates a single expression of an unrolled program, with the guard
/// assertions its calls need.
pub fn translate_expr(checked: &CheckedAst, e: &UExpr) -> Result<(String, Vec<String>), TranslateError> {
    let idents: Vec<String> = (0..checked.n_cells).map(|c| checked.cell_ident(c)).collect();
    let domains: Vec<usize> = (0..checked.n_cells).map(|c| checked.cell_domain(c)).collect();
    let mut t = Translator { syms: &checked.symbols, idents: &idents, domains: &domains, guards: Vec::new(), func: String::new() };
    let v = t.int(e, &[])?;
    Ok((v.text, t.guards))
}

/// Like [`translate_expr`] in a boolean position.
pub fn translate_bool(checked: &CheckedAst, e: &UExpr) -> Result<(String, Vec<String>), TranslateError> {
    let idents: Vec<String> = (0..checked.n_cells).map(|c| checked.cell_ident(c)).collect();
    let domains: Vec<usize> = (0..checked.n_cells).map(|c| checked.cell_domain(c)).collect();
    let mut t = Translator { syms: &checked.symbols, idents: &idents, domains: &domains, guards: Vec::new(), func: String::new() };
    let v = t.boolean(e, &[])?;
    Ok((v, t.guards))
}

pub fn translate_stmt(checked: &CheckedAst, s: &UStmt) -> Result<Vec<String>, TranslateError> {
    let idents: Vec<String> = (0..checked.n_cells).map(|c| checked.cell_ident(c)).collect();
    let domains: Vec<usize> = (0..checked.n_cells).map(|c| checked.cell_domain(c)).collect();
    let mut t = Translator { syms: &checked.symbols, idents: &idents, domains: &domains, guards: Vec::new(), func: String::new() };
    let mut out = Vec::new();
    t.stmt(s, &mut out)?;
    Ok(out)
}

pub fn translate(checked: &CheckedAst) -> Result<SmtScript, TranslateError> {
    let u = unroll(checked)?;
    translate_unrolled(checked, &u.stmts)
}

pub fn translate_unrolled(checked: &CheckedAst, stmts: &[UStmt]) -> Result<SmtScript, TranslateError> {
    let idents: Vec<String> = (0..checked.n_cells).map(|c| checked.cell_ident(c)).collect();
    let domains: Vec<usize> = (0..checked.n_cells).map(|c| checked.cell_domain(c)).collect();
    let mut t = Translator { syms: &checked.symbols, idents: &idents, domains: &domains, guards: Vec::new(), func: String::new() };
    let mut assertions = Vec::new();
    for s in stmts {
        t.stmt(s, &mut assertions)?;
    }
    let consts = idents.iter().cloned().zip(domains.iter().copied()).collect();
    Ok(SmtScript { logic: "QF_LIA".into(), consts, assertions })
}

/// SMT-LIB text for a checked program.
pub fn emit_smtlib(checked: &CheckedAst) -> Result<String, TranslateError> {
    Ok(translate(checked)?.text())
}

/// Cell identifiers by name, for reading models back.
pub(crate) fn ident_map(checked: &CheckedAst) -> HashMap<String, usize> {
    (0..checked.n_cells).map(|c| (checked.cell_ident(c), c)).collect()
}

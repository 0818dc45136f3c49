use thiserror::Error;

use crate::frontend::ast::*;
use crate::frontend::eval::{apply_binop, call_function, EvalFault};
use crate::frontend::CheckedAst;

pub type CellId = usize;

/// Expression with loops, `with` bindings and constants substituted away.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UExpr {
    Int(i64),
    Cell(CellId),
    Call(String, Vec<UExpr>),
    Binary(BinOp, Box<UExpr>, Box<UExpr>),
    Compare(CmpOp, Box<UExpr>, Box<UExpr>),
    Not(Box<UExpr>),
    And(Box<UExpr>, Box<UExpr>),
    Or(Box<UExpr>, Box<UExpr>),
    Cond { then: Box<UExpr>, cond: Box<UExpr>, otherwise: Box<UExpr> },
}

impl UExpr {
    /// Distinct cells in order of first occurrence.
    pub fn cells(&self) -> Vec<CellId> {
        let mut out = Vec::new();
        self.collect_cells(&mut out);
        out
    }

    fn collect_cells(&self, out: &mut Vec<CellId>) {
        match self {
            UExpr::Int(_) => {}
            UExpr::Cell(c) => {
                if !out.contains(c) {
                    out.push(*c);
                }
            }
            UExpr::Call(_, args) => args.iter().for_each(|a| a.collect_cells(out)),
            UExpr::Binary(_, a, b) | UExpr::Compare(_, a, b) | UExpr::And(a, b) | UExpr::Or(a, b) => {
                a.collect_cells(out);
                b.collect_cells(out);
            }
            UExpr::Not(a) => a.collect_cells(out),
            UExpr::Cond { then, cond, otherwise } => {
                then.collect_cells(out);
                cond.collect_cells(out);
                otherwise.collect_cells(out);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UStmt {
    SetTo { target: CellId, value: UExpr, loc: Loc },
    SetToConstant { target: CellId, value: i64, loc: Loc },
    Observe { target: CellId, value: i64, loc: Loc },
    /// `if cell == value: then_body else: else_body`
    If { cell: CellId, value: i64, then_body: Vec<UStmt>, else_body: Vec<UStmt>, loc: Loc },
}

impl UStmt {
    pub fn loc(&self) -> Loc {
        match self {
            UStmt::SetTo { loc, .. }
            | UStmt::SetToConstant { loc, .. }
            | UStmt::Observe { loc, .. }
            | UStmt::If { loc, .. } => *loc,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Unrolled<'a> {
    pub checked: &'a CheckedAst,
    pub stmts: Vec<UStmt>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{loc}: {message}")]
pub struct UnrollError {
    pub loc: Loc,
    pub code: &'static str,
    pub message: String,
}

struct Unroller<'a> {
    checked: &'a CheckedAst,
    env: Vec<(String, i64)>,
    loc: Loc,
}

/// Expands `for` loops and `with` blocks and resolves every array access to a
/// constant cell.
pub fn unroll(checked: &CheckedAst) -> Result<Unrolled<'_>, UnrollError> {
    let mut u = Unroller { checked, env: Vec::new(), loc: Loc::default() };
    let mut stmts = Vec::new();
    for s in checked.ast.statements() {
        u.stmt(s, &mut stmts)?;
    }
    Ok(Unrolled { checked, stmts })
}

impl<'a> Unroller<'a> {
    fn fail<T>(&self, code: &'static str, message: impl Into<String>) -> Result<T, UnrollError> {
        Err(UnrollError { loc: self.loc, code, message: message.into() })
    }

    fn fault<T>(&self, f: EvalFault) -> Result<T, UnrollError> {
        self.fail("E105", f.to_string())
    }

    fn block(&mut self, body: &[Stmt]) -> Result<Vec<UStmt>, UnrollError> {
        let mut out = Vec::new();
        for s in body {
            self.stmt(s, &mut out)?;
        }
        Ok(out)
    }

    fn stmt(&mut self, s: &Stmt, out: &mut Vec<UStmt>) -> Result<(), UnrollError> {
        self.loc = s.loc;
        let loc = s.loc;
        match &s.kind {
            StmtKind::SetTo { target, value } => {
                let target = self.cell(target)?;
                let value = self.expr(value)?;
                out.push(UStmt::SetTo { target, value, loc });
            }
            StmtKind::SetToConstant { target, value } => {
                let target = self.cell(target)?;
                let value = self.constant(value)?;
                let dom = self.checked.cell_domain(target);
                if value < 0 || value as usize >= dom {
                    return self.fail(
                        "E112",
                        format!("value {value} outside the domain {{0..{}}} of {}", dom - 1, self.checked.cell_name(target)),
                    );
                }
                out.push(UStmt::SetToConstant { target, value, loc });
            }
            StmtKind::ObserveValue { target, value } => {
                let target = self.cell(target)?;
                let value = self.constant(value)?;
                let dom = self.checked.cell_domain(target);
                if value < 0 || value as usize >= dom {
                    return self.fail(
                        "E112",
                        format!("observed value {value} outside the domain of {}", self.checked.cell_name(target)),
                    );
                }
                out.push(UStmt::Observe { target, value, loc });
            }
            StmtKind::If { cond, then_body, else_body } => match self.expr(cond)? {
                UExpr::Int(v) => {
                    let chosen = if v != 0 { then_body } else { else_body };
                    for s in chosen {
                        self.stmt(s, out)?;
                    }
                }
                UExpr::Compare(CmpOp::Eq, a, b) => {
                    let (UExpr::Cell(cell), UExpr::Int(value)) = (*a, *b) else {
                        return self.fail("E109", "gate condition must have the form `variable == constant`");
                    };
                    let dom = self.checked.cell_domain(cell);
                    if value < 0 || value as usize >= dom {
                        return self.fail(
                            "E109",
                            format!("condition value {value} outside the domain of {}", self.checked.cell_name(cell)),
                        );
                    }
                    let then_body = self.block(then_body)?;
                    let else_body = self.block(else_body)?;
                    out.push(UStmt::If { cell, value, then_body, else_body, loc });
                }
                _ => return self.fail("E109", "gate condition must have the form `variable == constant`"),
            },
            StmtKind::For { var, start, end, body } => {
                let lo = match start {
                    Some(e) => self.constant(e)?,
                    None => 0,
                };
                let hi = self.constant(end)?;
                for v in lo..hi {
                    self.env.push((var.clone(), v));
                    for s in body {
                        self.stmt(s, out)?;
                    }
                    self.env.pop();
                }
            }
            StmtKind::With { source, var, body } => {
                let cell = self.cell(source)?;
                let dom = self.checked.cell_domain(cell);
                let mut chain: Vec<UStmt> = Vec::new();
                for v in (0..dom as i64).rev() {
                    self.env.push((var.clone(), v));
                    let then_body = self.block(body);
                    self.env.pop();
                    let then_body = then_body?;
                    chain = vec![UStmt::If { cell, value: v, then_body, else_body: chain, loc }];
                }
                out.extend(chain);
            }
            StmtKind::Assign { .. } | StmtKind::Return(_) => {
                return self.fail("E115", "statement only allowed inside a function body");
            }
        }
        Ok(())
    }

    fn lookup_name(&self, n: &str) -> Option<i64> {
        self.env
            .iter()
            .rev()
            .find(|(k, _)| k == n)
            .map(|(_, v)| *v)
            .or_else(|| self.checked.symbols.consts.get(n).copied())
    }

    fn constant(&mut self, e: &Expr) -> Result<i64, UnrollError> {
        match self.expr(e)? {
            UExpr::Int(v) => Ok(v),
            _ => self.fail("E103", "expression is not a compile-time constant"),
        }
    }

    fn cell(&mut self, e: &Expr) -> Result<CellId, UnrollError> {
        match self.expr(e)? {
            UExpr::Cell(c) => Ok(c),
            _ => self.fail("E113", "expected a variable or parameter cell"),
        }
    }

    fn expr(&mut self, e: &Expr) -> Result<UExpr, UnrollError> {
        Ok(match e {
            Expr::Int(v) => UExpr::Int(*v),
            Expr::Name(n) => {
                if let Some(v) = self.lookup_name(n) {
                    UExpr::Int(v)
                } else if let Some(d) = self.checked.symbols.decls.get(n) {
                    if !d.dims.is_empty() {
                        return self.fail("E111", format!("`{n}` is an array and needs {} indices", d.dims.len()));
                    }
                    UExpr::Cell(d.base)
                } else {
                    return self.fail("E102", format!("undeclared identifier `{n}`"));
                }
            }
            Expr::Index(n, idx) => {
                let Some(d) = self.checked.symbols.decls.get(n) else {
                    return self.fail("E102", format!("undeclared array `{n}`"));
                };
                let mut vals = Vec::with_capacity(idx.len());
                for i in idx {
                    vals.push(self.constant(i)?);
                }
                if vals.len() != d.dims.len() {
                    return self.fail("E111", format!("`{n}` has {} dimensions, got {} indices", d.dims.len(), vals.len()));
                }
                let shown = vals.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
                if vals.iter().zip(&d.dims).any(|(&v, &dim)| v < 0 || v as usize >= dim) {
                    return self.fail("E111", format!("index out of bounds: {n}[{shown}]"));
                }
                let idx: Vec<usize> = vals.iter().map(|&v| v as usize).collect();
                UExpr::Cell(d.base + d.flat_index(&idx).unwrap())
            }
            Expr::Call(f, args) => {
                let mut lowered = Vec::with_capacity(args.len());
                for a in args {
                    lowered.push(self.expr(a)?);
                }
                let consts: Option<Vec<i64>> = lowered
                    .iter()
                    .map(|a| if let UExpr::Int(v) = a { Some(*v) } else { None })
                    .collect();
                if let Some(vals) = consts {
                    if let Ok(v) = call_function(&self.checked.symbols, f, &vals) {
                        return Ok(UExpr::Int(v));
                    }
                }
                UExpr::Call(f.clone(), lowered)
            }
            Expr::Binary(op, a, b) => {
                let a = self.expr(a)?;
                let b = self.expr(b)?;
                match (&a, &b) {
                    (UExpr::Int(x), UExpr::Int(y)) => match apply_binop(*op, *x, *y) {
                        Ok(v) => UExpr::Int(v),
                        Err(f) => return self.fault(f),
                    },
                    _ => UExpr::Binary(*op, Box::new(a), Box::new(b)),
                }
            }
            Expr::Compare(op, a, b) => {
                let a = self.expr(a)?;
                let b = self.expr(b)?;
                match (&a, &b) {
                    (UExpr::Int(x), UExpr::Int(y)) => UExpr::Int(op.apply(*x, *y) as i64),
                    _ => UExpr::Compare(*op, Box::new(a), Box::new(b)),
                }
            }
            Expr::Not(a) => match self.expr(a)? {
                UExpr::Int(x) => UExpr::Int((x == 0) as i64),
                a => UExpr::Not(Box::new(a)),
            },
            Expr::And(a, b) => {
                let a = self.expr(a)?;
                let b = self.expr(b)?;
                match (&a, &b) {
                    (UExpr::Int(x), UExpr::Int(y)) => UExpr::Int((*x != 0 && *y != 0) as i64),
                    _ => UExpr::And(Box::new(a), Box::new(b)),
                }
            }
            Expr::Or(a, b) => {
                let a = self.expr(a)?;
                let b = self.expr(b)?;
                match (&a, &b) {
                    (UExpr::Int(x), UExpr::Int(y)) => UExpr::Int((*x != 0 || *y != 0) as i64),
                    _ => UExpr::Or(Box::new(a), Box::new(b)),
                }
            }
            Expr::Cond { then, cond, otherwise } => {
                let c = self.expr(cond)?;
                match c {
                    UExpr::Int(x) => {
                        if x != 0 {
                            self.expr(then)?
                        } else {
                            self.expr(otherwise)?
                        }
                    }
                    c => UExpr::Cond {
                        then: Box::new(self.expr(then)?),
                        cond: Box::new(c),
                        otherwise: Box::new(self.expr(otherwise)?),
                    },
                }
            }
        })
    }
}

use crate::frontend::ast::{Expr, Stmt, StmtKind};
use crate::frontend::eval::{eval, EvalFault};
use crate::frontend::CheckedAst;
use crate::ir::ParamAssignment;

/// Outcome of running a checked program directly from its syntax tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AstExecution {
    pub values: Vec<Option<u32>>,
    pub observations: Vec<(usize, u32)>,
    pub fault: Option<String>,
}

impl AstExecution {
    pub fn consistent(&self) -> bool {
        self.fault.is_none() && self.observations.iter().all(|&(c, x)| self.values[c] == Some(x))
    }
}

/// Executes the program without unrolling: loops run, `with` binds the
/// current value, and array indices are evaluated as execution proceeds.
/// Parameter values are given per cell.
pub fn execute_ast(checked: &CheckedAst, params: &ParamAssignment) -> AstExecution {
    let mut values = vec![None; checked.n_cells];
    for (&c, &x) in &params.values {
        values[c] = Some(x);
    }
    let mut run = Run { checked, values, env: Vec::new(), observations: Vec::new() };
    let stmts: Vec<&Stmt> = checked.ast.statements().collect();
    let mut fault = None;
    for s in stmts {
        if let Err(e) = run.stmt(s) {
            fault = Some(e);
            break;
        }
    }
    AstExecution { values: run.values, observations: run.observations, fault }
}

struct Run<'a> {
    checked: &'a CheckedAst,
    values: Vec<Option<u32>>,
    env: Vec<(String, i64)>,
    observations: Vec<(usize, u32)>,
}

impl<'a> Run<'a> {
    fn cell(&mut self, e: &Expr) -> Result<usize, String> {
        let (name, idx) = match e {
            Expr::Name(n) => (n, &[][..]),
            Expr::Index(n, idx) => (n, idx.as_slice()),
            _ => return Err("assignment target is not a cell".into()),
        };
        let d = self.checked.symbols.decls.get(name).ok_or_else(|| format!("unknown variable {name}"))?;
        let mut index = Vec::with_capacity(idx.len());
        for i in idx {
            let v = self.expr(i).map_err(|f| f.to_string())?;
            if v < 0 {
                return Err(format!("negative index into {name}"));
            }
            index.push(v as usize);
        }
        let flat = d.flat_index(&index).ok_or_else(|| format!("index out of bounds for {name}"))?;
        Ok(d.base + flat)
    }

    fn expr(&self, e: &Expr) -> Result<i64, EvalFault> {
        let syms = &self.checked.symbols;
        let mut lookup = |e: &Expr| -> Result<i64, EvalFault> {
            match e {
                Expr::Name(n) => {
                    if let Some((_, v)) = self.env.iter().rev().find(|(k, _)| k == n) {
                        return Ok(*v);
                    }
                    if let Some(v) = syms.consts.get(n) {
                        return Ok(*v);
                    }
                    let d = syms.decls.get(n).ok_or_else(|| EvalFault::NotConstant(n.clone()))?;
                    self.values[d.base].map(i64::from).ok_or_else(|| EvalFault::NotConstant(n.clone()))
                }
                Expr::Index(n, idx) => {
                    let d = syms.decls.get(n).ok_or_else(|| EvalFault::NotConstant(n.clone()))?;
                    let mut index = Vec::with_capacity(idx.len());
                    for i in idx {
                        let mut inner = |e: &Expr| -> Result<i64, EvalFault> {
                            match e {
                                Expr::Name(n) => self
                                    .env
                                    .iter()
                                    .rev()
                                    .find(|(k, _)| k == n)
                                    .map(|(_, v)| *v)
                                    .or_else(|| syms.consts.get(n).copied())
                                    .ok_or_else(|| EvalFault::NotConstant(n.clone())),
                                _ => Err(EvalFault::NotConstant("nested index".into())),
                            }
                        };
                        index.push(eval(syms, i, &mut inner, false)? as usize);
                    }
                    let flat = d.flat_index(&index).ok_or_else(|| EvalFault::NotConstant(n.clone()))?;
                    self.values[d.base + flat].map(i64::from).ok_or_else(|| EvalFault::NotConstant(n.clone()))
                }
                _ => unreachable!(),
            }
        };
        eval(syms, e, &mut lookup, false)
    }

    fn block(&mut self, body: &[Stmt]) -> Result<(), String> {
        for s in body {
            self.stmt(s)?;
        }
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt) -> Result<(), String> {
        match &s.kind {
            StmtKind::SetTo { target, value } => {
                let c = self.cell(target)?;
                let dom = self.checked.cell_domain(c);
                match self.expr(value) {
                    Ok(v) if v >= 0 && (v as usize) < dom => self.values[c] = Some(v as u32),
                    Ok(v) => return Err(format!("{} receives {v}, outside its domain", self.checked.cell_name(c))),
                    Err(f) => return Err(f.to_string()),
                }
            }
            StmtKind::SetToConstant { target, value } => {
                let c = self.cell(target)?;
                let v = self.expr(value).map_err(|f| f.to_string())?;
                self.values[c] = Some(v as u32);
            }
            StmtKind::ObserveValue { target, value } => {
                let c = self.cell(target)?;
                let v = self.expr(value).map_err(|f| f.to_string())?;
                self.observations.push((c, v as u32));
            }
            StmtKind::If { cond, then_body, else_body } => {
                let c = self.expr(cond).map_err(|f| f.to_string())?;
                self.block(if c != 0 { then_body } else { else_body })?;
            }
            StmtKind::For { var, start, end, body } => {
                let a = match start {
                    Some(e) => self.expr(e).map_err(|f| f.to_string())?,
                    None => 0,
                };
                let b = self.expr(end).map_err(|f| f.to_string())?;
                for i in a..b {
                    self.env.push((var.clone(), i));
                    let r = self.block(body);
                    self.env.pop();
                    r?;
                }
            }
            StmtKind::With { source, var, body } => {
                let v = self.expr(source).map_err(|f| f.to_string())?;
                self.env.push((var.clone(), v));
                let r = self.block(body);
                self.env.pop();
                r?;
            }
            StmtKind::Assign { .. } | StmtKind::Return(_) => return Err("statement outside a function".into()),
        }
        Ok(())
    }
}

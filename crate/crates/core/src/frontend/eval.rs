use indexmap::IndexMap;
use thiserror::Error;

use super::ast::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalFault {
    #[error("division by zero")]
    DivisionByZero,
    #[error("integer overflow")]
    Overflow,
    #[error("negative intermediate constant {0}")]
    Negative(i64),
    #[error("function `{0}` finished without returning")]
    NoReturn(String),
    #[error("`{func}` returned {value}, outside its output domain")]
    OutOfRange { func: String, value: i64 },
    #[error("`{func}` received {value} for argument {arg}, outside its input domain")]
    ArgOutOfRange { func: String, arg: usize, value: i64 },
    #[error("`{0}` is not a compile-time constant")]
    NotConstant(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("`{0}` expects {1} arguments")]
    Arity(String, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuncInfo {
    pub name: String,
    pub params: Vec<String>,
    pub in_domains: Vec<usize>,
    pub out_domain: usize,
    pub body: Vec<Stmt>,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeclInfo {
    pub name: String,
    pub kind: DeclKind,
    pub domain: usize,
    pub dims: Vec<usize>,
    /// First cell id of this declaration in the dense cell numbering.
    pub base: usize,
    pub loc: Loc,
}

impl DeclInfo {
    pub fn size(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn flat_index(&self, index: &[usize]) -> Option<usize> {
        if index.len() != self.dims.len() {
            return None;
        }
        let mut flat = 0;
        for (i, d) in index.iter().zip(&self.dims) {
            if i >= d {
                return None;
            }
            flat = flat * d + i;
        }
        Some(flat)
    }

    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims.len()];
        for k in (0..self.dims.len()).rev() {
            idx[k] = flat % self.dims[k];
            flat /= self.dims[k];
        }
        idx
    }
}

/// Resolved names of a checked program.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Symbols {
    pub consts: IndexMap<String, i64>,
    pub functions: IndexMap<String, FuncInfo>,
    pub decls: IndexMap<String, DeclInfo>,
}

pub fn floor_div(a: i64, b: i64) -> Result<i64, EvalFault> {
    if b == 0 {
        return Err(EvalFault::DivisionByZero);
    }
    let q = a.checked_div(b).ok_or(EvalFault::Overflow)?;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        Ok(q - 1)
    } else {
        Ok(q)
    }
}

pub fn floor_mod(a: i64, b: i64) -> Result<i64, EvalFault> {
    if b == 0 {
        return Err(EvalFault::DivisionByZero);
    }
    let r = a.checked_rem(b).ok_or(EvalFault::Overflow)?;
    if r != 0 && ((r < 0) != (b < 0)) {
        Ok(r + b)
    } else {
        Ok(r)
    }
}

pub fn apply_binop(op: BinOp, a: i64, b: i64) -> Result<i64, EvalFault> {
    match op {
        BinOp::Add => a.checked_add(b).ok_or(EvalFault::Overflow),
        BinOp::Sub => a.checked_sub(b).ok_or(EvalFault::Overflow),
        BinOp::Mul => a.checked_mul(b).ok_or(EvalFault::Overflow),
        BinOp::Div => floor_div(a, b),
        BinOp::Mod => floor_mod(a, b),
    }
}

/// Evaluates an expression. `lookup` resolves bare names and indexed cells;
/// calls go through the function table. With `strict` set, negative
/// intermediate values are rejected (compile-time constant folding).
pub fn eval(
    syms: &Symbols,
    e: &Expr,
    lookup: &mut dyn FnMut(&Expr) -> Result<i64, EvalFault>,
    strict: bool,
) -> Result<i64, EvalFault> {
    let v = match e {
        Expr::Int(v) => *v,
        Expr::Name(_) | Expr::Index(..) => lookup(e)?,
        Expr::Call(f, args) => {
            let mut vals = Vec::with_capacity(args.len());
            for a in args {
                vals.push(eval(syms, a, lookup, strict)?);
            }
            call_function(syms, f, &vals)?
        }
        Expr::Binary(op, a, b) => {
            let a = eval(syms, a, lookup, strict)?;
            let b = eval(syms, b, lookup, strict)?;
            apply_binop(*op, a, b)?
        }
        Expr::Compare(op, a, b) => {
            let a = eval(syms, a, lookup, strict)?;
            let b = eval(syms, b, lookup, strict)?;
            op.apply(a, b) as i64
        }
        Expr::Not(a) => (eval(syms, a, lookup, strict)? == 0) as i64,
        Expr::And(a, b) => {
            (eval(syms, a, lookup, strict)? != 0 && eval(syms, b, lookup, strict)? != 0) as i64
        }
        Expr::Or(a, b) => {
            (eval(syms, a, lookup, strict)? != 0 || eval(syms, b, lookup, strict)? != 0) as i64
        }
        Expr::Cond { then, cond, otherwise } => {
            if eval(syms, cond, lookup, strict)? != 0 {
                eval(syms, then, lookup, strict)?
            } else {
                eval(syms, otherwise, lookup, strict)?
            }
        }
    };
    if strict && v < 0 {
        return Err(EvalFault::Negative(v));
    }
    Ok(v)
}

/// Runs a `@CompileMe` function on concrete arguments, enforcing its
/// declared input and output domains.
pub fn call_function(syms: &Symbols, name: &str, args: &[i64]) -> Result<i64, EvalFault> {
    let f = syms.functions.get(name).ok_or_else(|| EvalFault::UnknownFunction(name.to_string()))?;
    if f.params.len() != args.len() {
        return Err(EvalFault::Arity(name.to_string(), f.params.len()));
    }
    for (i, (&a, &d)) in args.iter().zip(&f.in_domains).enumerate() {
        if a < 0 || a as usize >= d {
            return Err(EvalFault::ArgOutOfRange { func: name.to_string(), arg: i, value: a });
        }
    }
    let v = call_raw(syms, f, args)?;
    if v < 0 || v as usize >= f.out_domain {
        return Err(EvalFault::OutOfRange { func: name.to_string(), value: v });
    }
    Ok(v)
}

/// Runs a function body without checking the result against the output domain.
pub fn call_raw(syms: &Symbols, f: &FuncInfo, args: &[i64]) -> Result<i64, EvalFault> {
    let mut locals: Vec<(String, i64)> = f.params.iter().cloned().zip(args.iter().copied()).collect();
    match run_body(syms, &f.body, &mut locals)? {
        Some(v) => Ok(v),
        None => Err(EvalFault::NoReturn(f.name.clone())),
    }
}

fn run_body(syms: &Symbols, body: &[Stmt], locals: &mut Vec<(String, i64)>) -> Result<Option<i64>, EvalFault> {
    for s in body {
        match &s.kind {
            StmtKind::Assign { name, value } => {
                let v = eval_local(syms, value, locals)?;
                locals.push((name.clone(), v));
            }
            StmtKind::Return(e) => return eval_local(syms, e, locals).map(Some),
            StmtKind::If { cond, then_body, else_body } => {
                let c = eval_local(syms, cond, locals)?;
                let mark = locals.len();
                let r = run_body(syms, if c != 0 { then_body } else { else_body }, locals)?;
                if r.is_some() {
                    return Ok(r);
                }
                locals.truncate(mark);
            }
            _ => return Err(EvalFault::NotConstant("statement in function body".into())),
        }
    }
    Ok(None)
}

fn eval_local(syms: &Symbols, e: &Expr, locals: &[(String, i64)]) -> Result<i64, EvalFault> {
    let mut lookup = |e: &Expr| -> Result<i64, EvalFault> {
        match e {
            Expr::Name(n) => locals
                .iter()
                .rev()
                .find(|(k, _)| k == n)
                .map(|(_, v)| *v)
                .or_else(|| syms.consts.get(n).copied())
                .ok_or_else(|| EvalFault::NotConstant(n.clone())),
            Expr::Index(n, _) => Err(EvalFault::NotConstant(n.clone())),
            _ => unreachable!(),
        }
    };
    eval(syms, e, &mut lookup, false)
}

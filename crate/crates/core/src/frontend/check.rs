use std::collections::{HashMap, HashSet};
use std::fmt;

use super::ast::*;
use super::eval::{call_function, eval, DeclInfo, EvalFault, FuncInfo, Symbols};
use crate::ir::unroll::{unroll, CellId, UStmt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticDiagnostic {
    pub severity: Severity,
    pub code: &'static str,
    pub message: String,
    pub location: Loc,
}

impl fmt::Display for SemanticDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}: {sev}[{}]: {}", self.location, self.code, self.message)
    }
}

/// A program that passed semantic checks, with all names resolved.
#[derive(Debug, Clone)]
pub struct CheckedAst {
    pub ast: Ast,
    pub symbols: Symbols,
    pub n_cells: usize,
    pub warnings: Vec<SemanticDiagnostic>,
    bases: Vec<(usize, usize)>,
}

impl CheckedAst {
    pub fn decl_of(&self, cell: CellId) -> (&DeclInfo, Vec<usize>) {
        let pos = self.bases.partition_point(|&(b, _)| b <= cell) - 1;
        let d = &self.symbols.decls[self.bases[pos].1];
        (d, d.unflatten(cell - d.base))
    }

    pub fn cell_domain(&self, cell: CellId) -> usize {
        self.decl_of(cell).0.domain
    }

    pub fn cell_kind(&self, cell: CellId) -> DeclKind {
        self.decl_of(cell).0.kind
    }

    /// `tape[0,3,2]`, or the bare name for scalars.
    pub fn cell_name(&self, cell: CellId) -> String {
        let (d, idx) = self.decl_of(cell);
        if idx.is_empty() {
            d.name.clone()
        } else {
            let parts: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
            format!("{}[{}]", d.name, parts.join(","))
        }
    }

    /// `tape_0_3_2`, usable as an identifier in solver input formats.
    pub fn cell_ident(&self, cell: CellId) -> String {
        let (d, idx) = self.decl_of(cell);
        let mut s = d.name.clone();
        for i in idx {
            s.push('_');
            s.push_str(&i.to_string());
        }
        s
    }
}

struct Checker {
    syms: Symbols,
    diags: Vec<SemanticDiagnostic>,
    declared: HashMap<String, Loc>,
    used_decls: HashSet<String>,
    n_cells: usize,
}

impl Checker {
    fn error(&mut self, code: &'static str, loc: Loc, message: impl Into<String>) {
        self.diags.push(SemanticDiagnostic { severity: Severity::Error, code, message: message.into(), location: loc });
    }

    fn declare(&mut self, name: &str, loc: Loc) -> bool {
        if let Some(prev) = self.declared.get(name) {
            let prev = *prev;
            self.error("E101", loc, format!("`{name}` is already declared at {prev}"));
            false
        } else {
            self.declared.insert(name.to_string(), loc);
            true
        }
    }

    fn fold(&mut self, e: &Expr, loc: Loc, what: &str) -> Option<i64> {
        let syms = &self.syms;
        let mut lookup = |e: &Expr| -> Result<i64, EvalFault> {
            match e {
                Expr::Name(n) => syms.consts.get(n).copied().ok_or_else(|| EvalFault::NotConstant(n.clone())),
                Expr::Index(n, _) => Err(EvalFault::NotConstant(n.clone())),
                _ => unreachable!(),
            }
        };
        match eval(syms, e, &mut lookup, true) {
            Ok(v) => Some(v),
            Err(EvalFault::NotConstant(n)) => {
                let code = if self.declared.contains_key(&n) { "E103" } else { "E102" };
                let msg = if code == "E102" {
                    format!("undeclared identifier `{n}` in {what}")
                } else {
                    format!("`{n}` is not a compile-time constant ({what})")
                };
                self.error(code, loc, msg);
                None
            }
            Err(f) => {
                self.error("E105", loc, format!("{what}: {f}"));
                None
            }
        }
    }

    fn fold_size(&mut self, e: &Expr, loc: Loc, what: &str) -> Option<usize> {
        let v = self.fold(e, loc, what)?;
        if v < 1 {
            self.error("E104", loc, format!("{what} must be a positive integer, got {v}"));
            return None;
        }
        Some(v as usize)
    }

    fn function(&mut self, f: &FuncDef) {
        let ok_name = self.declare(&f.name, f.loc);
        let Some((ins, out)) = &f.signature else {
            self.error("E107", f.loc, format!("function `{}` lacks the @CompileMe decorator", f.name));
            return;
        };
        if ins.len() != f.params.len() {
            self.error(
                "E106",
                f.loc,
                format!("@CompileMe lists {} input domains but `{}` takes {} arguments", ins.len(), f.name, f.params.len()),
            );
        }
        let mut in_domains = Vec::new();
        for e in ins {
            in_domains.push(self.fold_size(e, f.loc, "input domain").unwrap_or(1));
        }
        let out_domain = self.fold_size(out, f.loc, "output domain").unwrap_or(1);
        let mut seen = HashSet::new();
        for p in &f.params {
            if !seen.insert(p) {
                self.error("E101", f.loc, format!("duplicate parameter `{p}`"));
            }
        }
        let mut locals: Vec<String> = f.params.clone();
        self.function_block(&f.body, &mut locals, true);
        if ok_name && ins.len() == f.params.len() {
            self.syms.functions.insert(
                f.name.clone(),
                FuncInfo {
                    name: f.name.clone(),
                    params: f.params.clone(),
                    in_domains,
                    out_domain,
                    body: f.body.clone(),
                    loc: f.loc,
                },
            );
        }
    }

    fn function_block(&mut self, body: &[Stmt], locals: &mut Vec<String>, top: bool) {
        let mark = locals.len();
        if top && body.is_empty() {
            return;
        }
        for (i, s) in body.iter().enumerate() {
            let last = i + 1 == body.len();
            match &s.kind {
                StmtKind::Return(e) => {
                    if !last {
                        self.error("E108", s.loc, "`return` must be the last statement of its block");
                    }
                    self.function_expr(e, locals, s.loc);
                }
                StmtKind::Assign { name, value } => {
                    self.function_expr(value, locals, s.loc);
                    if self.declared.contains_key(name) {
                        self.error("E101", s.loc, format!("local `{name}` shadows a global name"));
                    }
                    locals.push(name.clone());
                }
                StmtKind::If { cond, then_body, else_body } => {
                    self.function_expr(cond, locals, s.loc);
                    self.function_block(then_body, locals, false);
                    self.function_block(else_body, locals, false);
                }
                _ => self.error("E115", s.loc, "only assignments, `if` and `return` are allowed in function bodies"),
            }
        }
        locals.truncate(mark);
    }

    fn function_expr(&mut self, e: &Expr, locals: &[String], loc: Loc) {
        let mut problems: Vec<(&'static str, String)> = Vec::new();
        e.visit(&mut |x| match x {
            Expr::Name(n) => {
                if !locals.contains(n) && !self.syms.consts.contains_key(n) {
                    if self.syms.decls.contains_key(n) {
                        problems.push(("E115", format!("function bodies cannot read model variable `{n}`")));
                    } else {
                        problems.push(("E102", format!("undeclared identifier `{n}`")));
                    }
                }
            }
            Expr::Index(n, _) => problems.push(("E115", format!("function bodies cannot index arrays (`{n}`)"))),
            Expr::Call(f, args) => match self.syms.functions.get(f) {
                None => problems.push(("E102", format!("call to undeclared function `{f}`"))),
                Some(info) if info.params.len() != args.len() => problems.push((
                    "E106",
                    format!("`{f}` takes {} arguments, called with {}", info.params.len(), args.len()),
                )),
                _ => {}
            },
            Expr::Binary(BinOp::Div | BinOp::Mod, _, d) => {
                let syms = &self.syms;
                let mut lookup = |e: &Expr| -> Result<i64, EvalFault> {
                    match e {
                        Expr::Name(n) => syms.consts.get(n).copied().ok_or(EvalFault::NotConstant(n.clone())),
                        _ => Err(EvalFault::NotConstant(String::new())),
                    }
                };
                match eval(syms, d, &mut lookup, false) {
                    Ok(0) | Err(_) => problems.push(("E114", "divisor may be zero; divisors must be nonzero constants".into())),
                    Ok(_) => {}
                }
            }
            _ => {}
        });
        for (code, msg) in problems {
            self.error(code, loc, msg);
        }
    }

    /// Checks names and shapes in model statements. Index and condition
    /// values are validated later, after unrolling.
    fn model_stmt(&mut self, s: &Stmt, scope: &mut Vec<String>) {
        match &s.kind {
            StmtKind::SetTo { target, value } => {
                self.target(target, scope, s.loc, &[DeclKind::Var], "set_to");
                self.model_expr(value, scope, s.loc);
            }
            StmtKind::SetToConstant { target, value } => {
                self.target(target, scope, s.loc, &[DeclKind::Var, DeclKind::Param], "set_to_constant");
                self.index_expr(value, scope, s.loc);
            }
            StmtKind::ObserveValue { target, value } => {
                self.target(target, scope, s.loc, &[DeclKind::Var, DeclKind::Param], "observe_value");
                self.index_expr(value, scope, s.loc);
            }
            StmtKind::If { cond, then_body, else_body } => {
                match cond {
                    Expr::Compare(CmpOp::Eq, a, b) if matches!(**a, Expr::Name(_) | Expr::Index(..)) => {
                        self.model_expr(a, scope, s.loc);
                        self.index_expr(b, scope, s.loc);
                    }
                    _ => self.error("E109", s.loc, "gate condition must have the form `variable == constant`"),
                }
                for x in then_body {
                    self.model_stmt(x, scope);
                }
                for x in else_body {
                    self.model_stmt(x, scope);
                }
            }
            StmtKind::For { var, start, end, body } => {
                if let Some(st) = start {
                    self.index_expr(st, scope, s.loc);
                }
                self.index_expr(end, scope, s.loc);
                self.bind(var, s.loc);
                scope.push(var.clone());
                for x in body {
                    self.model_stmt(x, scope);
                }
                scope.pop();
            }
            StmtKind::With { source, var, body } => {
                if !matches!(source, Expr::Name(_) | Expr::Index(..)) {
                    self.error("E113", s.loc, "`with` source must be a variable or parameter cell");
                }
                self.model_expr(source, scope, s.loc);
                self.bind(var, s.loc);
                scope.push(var.clone());
                for x in body {
                    self.model_stmt(x, scope);
                }
                scope.pop();
            }
            StmtKind::Assign { .. } | StmtKind::Return(_) => {
                self.error("E108", s.loc, "assignments and `return` are only allowed inside function bodies")
            }
        }
    }

    fn bind(&mut self, var: &str, loc: Loc) {
        if self.declared.contains_key(var) {
            self.error("E101", loc, format!("loop variable `{var}` shadows a declared name"));
        }
    }

    fn target(&mut self, t: &Expr, scope: &[String], loc: Loc, kinds: &[DeclKind], method: &str) {
        let name = match t {
            Expr::Name(n) | Expr::Index(n, _) => n,
            _ => return self.error("E113", loc, "invalid assignment target"),
        };
        match self.syms.decls.get(name) {
            Some(d) if !kinds.contains(&d.kind) => {
                let kind = d.kind.keyword();
                self.error("E113", loc, format!("cannot call {method} on {kind} `{name}`"))
            }
            Some(_) => self.model_expr(t, scope, loc),
            None => self.error("E102", loc, format!("undeclared identifier `{name}`")),
        }
    }

    fn index_expr(&mut self, e: &Expr, scope: &[String], loc: Loc) {
        let mut bad = None;
        e.visit(&mut |x| {
            if let Expr::Name(n) | Expr::Index(n, _) = x {
                if self.syms.decls.contains_key(n) && !scope.contains(n) {
                    bad = Some(n.clone());
                }
            }
        });
        if let Some(n) = bad {
            self.error("E103", loc, format!("`{n}` is not a compile-time constant"));
        } else {
            self.model_expr(e, scope, loc);
        }
    }

    fn model_expr(&mut self, e: &Expr, scope: &[String], loc: Loc) {
        let mut problems: Vec<(&'static str, String)> = Vec::new();
        let mut used = Vec::new();
        e.visit(&mut |x| match x {
            Expr::Name(n) => {
                if scope.contains(n) || self.syms.consts.contains_key(n) {
                } else if let Some(d) = self.syms.decls.get(n) {
                    used.push(n.clone());
                    if !d.dims.is_empty() {
                        problems.push(("E111", format!("`{n}` is an array and needs {} indices", d.dims.len())));
                    }
                } else if self.syms.functions.contains_key(n) {
                    problems.push(("E102", format!("function `{n}` used as a value")));
                } else {
                    problems.push(("E102", format!("undeclared identifier `{n}`")));
                }
            }
            Expr::Index(n, idx) => match self.syms.decls.get(n) {
                Some(d) => {
                    used.push(n.clone());
                    if d.dims.len() != idx.len() {
                        problems.push(("E111", format!("`{n}` has {} dimensions, got {} indices", d.dims.len(), idx.len())));
                    }
                    for i in idx {
                        let mut cellref = None;
                        i.visit(&mut |y| {
                            if let Expr::Name(m) | Expr::Index(m, _) = y {
                                if self.syms.decls.contains_key(m) && !scope.contains(m) {
                                    cellref = Some(m.clone());
                                }
                            }
                        });
                        if let Some(m) = cellref {
                            problems.push(("E103", format!("array index uses runtime value `{m}`; bind it with `with` first")));
                        }
                    }
                }
                None => problems.push(("E102", format!("undeclared array `{n}`"))),
            },
            Expr::Call(f, args) => match self.syms.functions.get(f) {
                None => problems.push(("E102", format!("call to undeclared function `{f}`"))),
                Some(info) if info.params.len() != args.len() => problems.push((
                    "E106",
                    format!("`{f}` takes {} arguments, called with {}", info.params.len(), args.len()),
                )),
                _ => {}
            },
            Expr::Binary(BinOp::Div | BinOp::Mod, _, d) => {
                let mut runtime = false;
                d.visit(&mut |y| {
                    if let Expr::Name(m) | Expr::Index(m, _) | Expr::Call(m, _) = y {
                        if self.syms.decls.contains_key(m) || self.syms.functions.contains_key(m) {
                            runtime = true;
                        }
                    }
                });
                if runtime {
                    problems.push(("E114", "divisor may be zero; divisors must be nonzero constants".into()));
                }
            }
            _ => {}
        });
        self.used_decls.extend(used);
        for (code, msg) in problems {
            self.error(code, loc, msg);
        }
    }
}

/// Validates a parsed program: name resolution, constant folding, domains,
/// function signatures, gate-condition shape and single assignment per path.
pub fn check_semantics(ast: &Ast) -> Result<CheckedAst, Vec<SemanticDiagnostic>> {
    let mut c = Checker {
        syms: Symbols::default(),
        diags: Vec::new(),
        declared: HashMap::new(),
        used_decls: HashSet::new(),
        n_cells: 0,
    };
    for item in &ast.items {
        match item {
            Item::Const(k) => {
                if c.declare(&k.name, k.loc) {
                    if let Some(v) = c.fold(&k.value, k.loc, "constant") {
                        c.syms.consts.insert(k.name.clone(), v);
                    }
                }
            }
            Item::Function(f) => c.function(f),
            Item::Decl(d) => {
                let ok = c.declare(&d.name, d.loc);
                let domain = c.fold_size(&d.domain, d.loc, "domain size");
                let mut dims = Vec::new();
                let mut good = true;
                for e in &d.dims {
                    match c.fold_size(e, d.loc, "array dimension") {
                        Some(v) => dims.push(v),
                        None => good = false,
                    }
                }
                if let (true, Some(domain), true) = (ok, domain, good) {
                    let info = DeclInfo { name: d.name.clone(), kind: d.kind, domain, dims, base: c.n_cells, loc: d.loc };
                    c.n_cells += info.size();
                    c.syms.decls.insert(d.name.clone(), info);
                }
            }
            Item::Stmt(s) => {
                let mut scope = Vec::new();
                c.model_stmt(s, &mut scope);
            }
        }
    }

    let mut warnings = Vec::new();
    for d in c.syms.decls.values() {
        if !c.used_decls.contains(&d.name) {
            warnings.push(SemanticDiagnostic {
                severity: Severity::Warning,
                code: "W201",
                message: format!("`{}` is declared but never used", d.name),
                location: d.loc,
            });
        }
    }

    if c.diags.is_empty() {
        let bases = c.syms.decls.values().enumerate().map(|(i, d)| (d.base, i)).collect();
        let checked = CheckedAst { ast: ast.clone(), symbols: c.syms.clone(), n_cells: c.n_cells, warnings: Vec::new(), bases };
        match unroll(&checked) {
            Ok(u) => ssa_check(&checked, &u.stmts, &mut c.diags),
            Err(e) => c.diags.push(SemanticDiagnostic {
                severity: Severity::Error,
                code: e.code,
                message: e.message,
                location: e.loc,
            }),
        }
        if c.diags.is_empty() {
            warnings.sort_by_key(|d| d.location.key());
            return Ok(CheckedAst { warnings, ..checked });
        }
    }
    c.diags.sort_by(|a, b| a.location.key().cmp(&b.location.key()).then(a.code.cmp(b.code)));
    c.diags.dedup();
    Err(c.diags)
}

fn ssa_check(checked: &CheckedAst, stmts: &[UStmt], diags: &mut Vec<SemanticDiagnostic>) {
    let mut st = Ssa { assigned: HashMap::new(), log: Vec::new(), reported: HashSet::new() };
    st.block(checked, stmts, diags);
}

struct Ssa {
    assigned: HashMap<CellId, Loc>,
    log: Vec<CellId>,
    reported: HashSet<(CellId, usize, usize)>,
}

impl Ssa {
    fn block(&mut self, checked: &CheckedAst, stmts: &[UStmt], diags: &mut Vec<SemanticDiagnostic>) {
        for s in stmts {
            match s {
                UStmt::SetTo { target, loc, .. } | UStmt::SetToConstant { target, loc, .. } => {
                    if let Some(prev) = self.assigned.get(target) {
                        if self.reported.insert((*target, loc.line, loc.column)) {
                            diags.push(SemanticDiagnostic {
                                severity: Severity::Error,
                                code: "E110",
                                message: format!(
                                    "{} is assigned more than once on one execution path (first at {}, again at {})",
                                    checked.cell_name(*target),
                                    prev,
                                    loc
                                ),
                                location: *loc,
                            });
                        }
                    } else {
                        self.assigned.insert(*target, *loc);
                        self.log.push(*target);
                    }
                }
                UStmt::Observe { .. } => {}
                UStmt::If { then_body, else_body, .. } => {
                    let mut merged: Vec<(CellId, Loc)> = Vec::new();
                    for body in [then_body, else_body] {
                        let mark = self.log.len();
                        self.block(checked, body, diags);
                        for c in self.log.drain(mark..) {
                            let l = self.assigned.remove(&c).unwrap();
                            merged.push((c, l));
                        }
                    }
                    for (c, l) in merged {
                        if let std::collections::hash_map::Entry::Vacant(e) = self.assigned.entry(c) {
                            e.insert(l);
                            self.log.push(c);
                        }
                    }
                }
            }
        }
    }
}

/// Convenience used by tests and tools: evaluate a call on constants.
pub fn eval_call(checked: &CheckedAst, name: &str, args: &[i64]) -> Result<i64, EvalFault> {
    call_function(&checked.symbols, name, args)
}

//! Sketch source emission.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::frontend::ast::*;
use crate::frontend::CheckedAst;

const RESERVED: &[&str] = &[
    "assert", "assume", "bit", "boolean", "char", "double", "else", "false", "float", "for", "fork", "generator",
    "global", "harness", "if", "implements", "include", "int", "loop", "minimize", "new", "null", "package",
    "pragma", "ref", "repeat", "reorder", "return", "struct", "true", "void", "while", "do",
];

/// A complete `.sk` translation unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SketchUnit {
    pub globals: Vec<String>,
    pub functions: Vec<String>,
    pub harness: String,
    /// Number of unknown integers, one per scalar Param cell.
    pub holes: usize,
}

impl SketchUnit {
    pub fn text(&self) -> String {
        let mut s = String::new();
        for g in &self.globals {
            s.push_str(g);
            s.push('\n');
        }
        if !self.globals.is_empty() {
            s.push('\n');
        }
        for f in &self.functions {
            s.push_str(f);
            s.push_str("\n\n");
        }
        s.push_str(&self.harness);
        s
    }
}

struct Emitter {
    out: String,
    depth: usize,
    used: BTreeSet<String>,
}

fn name(n: &str) -> String {
    if RESERVED.contains(&n) {
        format!("{n}_")
    } else {
        n.to_string()
    }
}

/// Whether the value may be negative, judged syntactically.
fn may_be_negative(e: &Expr) -> bool {
    match e {
        Expr::Int(v) => *v < 0,
        Expr::Name(_) | Expr::Index(..) | Expr::Call(..) => false,
        Expr::Binary(BinOp::Sub, ..) => true,
        Expr::Binary(_, a, b) => may_be_negative(a) || may_be_negative(b),
        Expr::Cond { then, otherwise, .. } => may_be_negative(then) || may_be_negative(otherwise),
        Expr::Compare(..) | Expr::Not(_) | Expr::And(..) | Expr::Or(..) => false,
    }
}

fn is_atom(e: &Expr) -> bool {
    matches!(e, Expr::Int(_) | Expr::Name(_) | Expr::Index(..) | Expr::Call(..))
}

fn operand(e: &Expr) -> String {
    let s = expr(e);
    if is_atom(e) || matches!(e, Expr::Or(..) | Expr::Not(_)) {
        s
    } else {
        format!("({s})")
    }
}

fn bool_operand(e: &Expr) -> String {
    match e {
        Expr::Compare(..) | Expr::And(..) => expr(e),
        _ => operand(e),
    }
}

fn expr(e: &Expr) -> String {
    match e {
        Expr::Int(v) => v.to_string(),
        Expr::Name(n) => name(n),
        Expr::Index(n, idx) => {
            let mut s = name(n);
            for i in idx {
                write!(s, "[{}]", expr(i)).unwrap();
            }
            s
        }
        Expr::Call(f, args) => {
            let args: Vec<String> = args.iter().map(expr).collect();
            format!("{}({})", name(f), args.join(", "))
        }
        Expr::Binary(op, a, b) => {
            let (x, y) = (operand(a), operand(b));
            match op {
                // C truncates toward zero; the model's arithmetic floors.
                BinOp::Mod if may_be_negative(a) => format!("(({x} % {y}) + {y}) % {y}"),
                BinOp::Div if may_be_negative(a) => format!("({x} - ((({x} % {y}) + {y}) % {y})) / {y}"),
                _ => format!("{x} {} {y}", op.symbol()),
            }
        }
        Expr::Compare(op, a, b) => format!("{} {} {}", operand(a), op.symbol(), operand(b)),
        Expr::Not(a) => format!("!({})", expr(a)),
        Expr::And(a, b) => format!("{} && {}", bool_operand(a), bool_operand(b)),
        Expr::Or(a, b) => format!("({} || {})", bool_operand(a), bool_operand(b)),
        Expr::Cond { then, cond, otherwise } => {
            format!("{} ? {} : {}", operand(cond), operand(then), operand(otherwise))
        }
    }
}

fn collect_names(ast: &Ast, used: &mut BTreeSet<String>) {
    fn stmts(body: &[Stmt], used: &mut BTreeSet<String>) {
        for s in body {
            match &s.kind {
                StmtKind::For { var, body, .. } | StmtKind::With { var, body, .. } => {
                    used.insert(var.clone());
                    stmts(body, used);
                }
                StmtKind::If { then_body, else_body, .. } => {
                    stmts(then_body, used);
                    stmts(else_body, used);
                }
                StmtKind::Assign { name, .. } => {
                    used.insert(name.clone());
                }
                _ => {}
            }
        }
    }
    for item in &ast.items {
        match item {
            Item::Const(c) => {
                used.insert(c.name.clone());
            }
            Item::Decl(d) => {
                used.insert(d.name.clone());
            }
            Item::Function(f) => {
                used.insert(f.name.clone());
                used.extend(f.params.iter().cloned());
                stmts(&f.body, used);
            }
            Item::Stmt(s) => stmts(std::slice::from_ref(s), used),
        }
    }
}

impl Emitter {
    fn line(&mut self, text: &str) {
        for _ in 0..self.depth {
            self.out.push_str("  ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn fresh(&mut self, base: &str) -> String {
        let mut n = 0;
        loop {
            let cand = format!("{base}{n}");
            if !self.used.contains(&cand) {
                self.used.insert(cand.clone());
                return cand;
            }
            n += 1;
        }
    }

    fn block(&mut self, body: &[Stmt]) {
        self.depth += 1;
        for s in body {
            self.stmt(s);
        }
        self.depth -= 1;
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::SetTo { target, value } | StmtKind::SetToConstant { target, value } => {
                self.line(&format!("{} = {};", expr(target), expr(value)));
            }
            StmtKind::ObserveValue { target, value } => {
                self.line(&format!("assert {} == {};", expr(target), operand(value)));
            }
            StmtKind::If { cond, then_body, else_body } => {
                self.line(&format!("if ({}) {{", expr(cond)));
                self.block(then_body);
                if else_body.is_empty() {
                    self.line("}");
                } else {
                    self.line("} else {");
                    self.block(else_body);
                    self.line("}");
                }
            }
            StmtKind::For { var, start, end, body } => {
                let v = name(var);
                let start = start.as_ref().map_or("0".to_string(), expr);
                self.line(&format!("for(int {v} = {start}; {v} < {}; {v}++) {{", expr(end)));
                self.block(body);
                self.line("}");
            }
            StmtKind::With { source, var, body } => {
                self.line("{");
                self.depth += 1;
                self.line(&format!("int {} = {};", name(var), expr(source)));
                for s in body {
                    self.stmt(s);
                }
                self.depth -= 1;
                self.line("}");
            }
            StmtKind::Assign { name: n, value } => self.line(&format!("{} = {};", name(n), expr(value))),
            StmtKind::Return(e) => self.line(&format!("return {};", expr(e))),
        }
    }

    fn decl(&mut self, d: &Decl) {
        let dims: String = d.dims.iter().map(|e| format!("[{}]", expr(e))).collect();
        let v = name(&d.name);
        match (d.kind, d.dims.is_empty()) {
            (DeclKind::Var, true) => self.line(&format!("int {v};")),
            (DeclKind::Var, false) => self.line(&format!("int{dims} {v};")),
            (DeclKind::Param, true) => self.line(&format!("int {v} = ??; assert {v} < {};", operand(&d.domain))),
            (DeclKind::Param, false) => {
                self.line(&format!("int{dims} {v} = (int{dims}) ??;"));
                let mut index = String::new();
                let start = self.depth;
                for dim in &d.dims {
                    let i = self.fresh("i");
                    self.line(&format!("for(int {i} = 0; {i} < {}; {i}++) {{", expr(dim)));
                    write!(index, "[{i}]").unwrap();
                    self.depth += 1;
                }
                self.line(&format!("assert {v}{index} < {};", operand(&d.domain)));
                while self.depth > start {
                    self.depth -= 1;
                    self.line("}");
                }
            }
        }
    }
}

fn function(f: &FuncDef) -> String {
    let mut e = Emitter { out: String::new(), depth: 1, used: BTreeSet::new() };
    let mut locals = BTreeSet::new();
    fn assigned(body: &[Stmt], out: &mut BTreeSet<String>) {
        for s in body {
            match &s.kind {
                StmtKind::Assign { name, .. } => {
                    out.insert(name.clone());
                }
                StmtKind::If { then_body, else_body, .. } => {
                    assigned(then_body, out);
                    assigned(else_body, out);
                }
                _ => {}
            }
        }
    }
    assigned(&f.body, &mut locals);
    for l in locals.iter().filter(|l| !f.params.contains(l)) {
        e.line(&format!("int {};", name(l)));
    }
    for s in &f.body {
        e.stmt(s);
    }
    let params: Vec<String> = f.params.iter().map(|p| format!("int {}", name(p))).collect();
    format!("int {}({}) {{\n{}}}", name(&f.name), params.join(", "), e.out)
}

/// Translates a checked (not unrolled) program into one Sketch harness.
pub fn emit_sketch(checked: &CheckedAst) -> SketchUnit {
    let ast = &checked.ast;
    let mut used = BTreeSet::new();
    collect_names(ast, &mut used);
    used.extend(RESERVED.iter().map(|s| s.to_string()));
    let mut e = Emitter { out: String::new(), depth: 1, used };
    let mut globals = Vec::new();
    let mut functions = Vec::new();
    for item in &ast.items {
        match item {
            Item::Const(c) => globals.push(format!("int {} = {};", name(&c.name), expr(&c.value))),
            Item::Function(f) => functions.push(function(f)),
            Item::Decl(d) => e.decl(d),
            Item::Stmt(s) => e.stmt(s),
        }
    }
    let holes = checked.symbols.decls.values().filter(|d| d.kind == DeclKind::Param).map(|d| d.size()).sum();
    SketchUnit { globals, functions, harness: format!("harness void main() {{\n{}}}\n", e.out), holes }
}

use super::ast::*;

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Cond { .. } => 0,
        Expr::Or(..) => 1,
        Expr::And(..) => 2,
        Expr::Compare(..) => 3,
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 4,
        Expr::Binary(..) => 5,
        Expr::Not(_) => 6,
        _ => 7,
    }
}

fn sub(e: &Expr, min: u8) -> String {
    let s = expr_to_string(e);
    if prec(e) < min {
        format!("({s})")
    } else {
        s
    }
}

fn list(args: &[Expr]) -> String {
    args.iter().map(expr_to_string).collect::<Vec<_>>().join(", ")
}

pub fn expr_to_string(e: &Expr) -> String {
    match e {
        Expr::Int(v) => v.to_string(),
        Expr::Name(n) => n.clone(),
        Expr::Index(n, idx) => format!("{n}[{}]", list(idx)),
        Expr::Call(n, args) => format!("{n}({})", list(args)),
        Expr::Binary(op, a, b) => {
            let p = prec(e);
            format!("{} {} {}", sub(a, p), op.symbol(), sub(b, p + 1))
        }
        Expr::Compare(op, a, b) => format!("{} {} {}", sub(a, 4), op.symbol(), sub(b, 4)),
        Expr::Not(a) => format!("not {}", sub(a, 6)),
        Expr::And(a, b) => format!("{} and {}", sub(a, 2), sub(b, 3)),
        Expr::Or(a, b) => format!("{} or {}", sub(a, 1), sub(b, 2)),
        Expr::Cond { then, cond, otherwise } => {
            format!("{} if {} else {}", sub(then, 1), sub(cond, 1), sub(otherwise, 0))
        }
    }
}

fn block(out: &mut String, body: &[Stmt], depth: usize) {
    for s in body {
        stmt(out, s, depth);
    }
}

fn stmt(out: &mut String, s: &Stmt, depth: usize) {
    let pad = "    ".repeat(depth);
    match &s.kind {
        StmtKind::SetTo { target, value } => {
            out.push_str(&format!("{pad}{}.set_to({})\n", expr_to_string(target), expr_to_string(value)))
        }
        StmtKind::SetToConstant { target, value } => out.push_str(&format!(
            "{pad}{}.set_to_constant({})\n",
            expr_to_string(target),
            expr_to_string(value)
        )),
        StmtKind::ObserveValue { target, value } => out.push_str(&format!(
            "{pad}{}.observe_value({})\n",
            expr_to_string(target),
            expr_to_string(value)
        )),
        StmtKind::If { cond, then_body, else_body } => {
            out.push_str(&format!("{pad}if {}:\n", expr_to_string(cond)));
            block(out, then_body, depth + 1);
            let mut rest = else_body;
            loop {
                match rest.as_slice() {
                    [] => break,
                    [Stmt { kind: StmtKind::If { cond, then_body, else_body }, .. }] => {
                        out.push_str(&format!("{pad}elif {}:\n", expr_to_string(cond)));
                        block(out, then_body, depth + 1);
                        rest = else_body;
                    }
                    other => {
                        out.push_str(&format!("{pad}else:\n"));
                        block(out, other, depth + 1);
                        break;
                    }
                }
            }
        }
        StmtKind::For { var, start, end, body } => {
            let range = match start {
                Some(s) => format!("{}, {}", expr_to_string(s), expr_to_string(end)),
                None => expr_to_string(end),
            };
            out.push_str(&format!("{pad}for {var} in range({range}):\n"));
            block(out, body, depth + 1);
        }
        StmtKind::With { source, var, body } => {
            out.push_str(&format!("{pad}with {} as {var}:\n", expr_to_string(source)));
            block(out, body, depth + 1);
        }
        StmtKind::Assign { name, value } => out.push_str(&format!("{pad}{name} = {}\n", expr_to_string(value))),
        StmtKind::Return(e) => out.push_str(&format!("{pad}return {}\n", expr_to_string(e))),
    }
}

/// Renders an AST back to DSL source with canonical 4-space indentation.
pub fn print_ast(ast: &Ast) -> String {
    let mut out = String::new();
    for item in &ast.items {
        match item {
            Item::Const(c) => out.push_str(&format!("{} = {}\n", c.name, expr_to_string(&c.value))),
            Item::Decl(d) => {
                out.push_str(&format!("{} = {}({})", d.name, d.kind.keyword(), expr_to_string(&d.domain)));
                if !d.dims.is_empty() {
                    out.push_str(&format!("[{}]", list(&d.dims)));
                }
                out.push('\n');
            }
            Item::Function(f) => {
                if let Some((ins, ret)) = &f.signature {
                    out.push_str(&format!("@CompileMe([{}], {})\n", list(ins), expr_to_string(ret)));
                }
                out.push_str(&format!("def {}({}):\n", f.name, f.params.join(", ")));
                block(&mut out, &f.body, 1);
            }
            Item::Stmt(s) => stmt(&mut out, s, 0),
        }
    }
    out
}

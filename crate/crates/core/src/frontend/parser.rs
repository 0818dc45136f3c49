use thiserror::Error;

use super::ast::*;
use super::lexer::{Token, TokenKind};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{line}:{column}: {message} (expected one of: {})", expected.join(", "))]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub expected: Vec<String>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Ctx {
    TopLevel,
    Block,
    Function,
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

/// Parses a token stream produced by [`super::tokenize`].
pub fn parse(tokens: &[Token]) -> PResult<Ast> {
    if tokens.last().map(|t| t.kind) != Some(TokenKind::EndOfInput) {
        return Err(ParseError {
            line: 1,
            column: 1,
            message: "token stream is not terminated".into(),
            expected: vec!["end of input".into()],
        });
    }
    let mut p = Parser { toks: tokens, pos: 0 };
    let mut items = Vec::new();
    while p.peek().kind != TokenKind::EndOfInput {
        if p.peek().kind == TokenKind::Newline {
            p.pos += 1;
            continue;
        }
        p.top_level_item(&mut items)?;
    }
    Ok(Ast { items })
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, off: usize) -> &Token {
        let i = (self.pos + off).min(self.toks.len() - 1);
        &self.toks[i]
    }

    fn loc(&self) -> Loc {
        let t = self.peek();
        Loc::new(t.line, t.column)
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>, expected: &[&str]) -> PResult<T> {
        let t = self.peek();
        Err(ParseError {
            line: t.line,
            column: t.column,
            message: format!("{} at {}", message.into(), t),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn at(&self, kind: TokenKind, text: &str) -> bool {
        self.peek().is(kind, text)
    }

    fn at_punct(&self, text: &str) -> bool {
        self.at(TokenKind::Punctuation, text)
    }

    fn at_kw(&self, text: &str) -> bool {
        self.at(TokenKind::Keyword, text)
    }

    fn eat_punct(&mut self, text: &str) -> bool {
        if self.at_punct(text) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind, text: &str) -> PResult<Token> {
        if self.at(kind, text) {
            Ok(self.advance())
        } else {
            let shown = format!("`{text}`");
            self.error("unexpected token", &[&shown])
        }
    }

    fn expect_punct(&mut self, text: &str) -> PResult<Token> {
        self.expect(TokenKind::Punctuation, text)
    }

    fn expect_kw(&mut self, text: &str) -> PResult<Token> {
        self.expect(TokenKind::Keyword, text)
    }

    fn expect_ident(&mut self) -> PResult<String> {
        if self.peek().kind == TokenKind::Identifier {
            Ok(self.advance().text)
        } else {
            self.error("unexpected token", &["identifier"])
        }
    }

    fn expect_newline(&mut self) -> PResult<()> {
        match self.peek().kind {
            TokenKind::Newline => {
                self.advance();
                Ok(())
            }
            TokenKind::EndOfInput | TokenKind::Dedent => Ok(()),
            _ => self.error("unexpected token", &["newline", "`;`"]),
        }
    }

    fn top_level_item(&mut self, items: &mut Vec<Item>) -> PResult<()> {
        if self.at_punct("@") || self.at_kw("def") {
            let f = self.function()?;
            items.push(Item::Function(f));
            return Ok(());
        }
        if self.peek().kind == TokenKind::Identifier && self.peek_at(1).is(TokenKind::Operator, "=") {
            loop {
                items.push(self.top_level_binding()?);
                if !self.eat_punct(";") {
                    break;
                }
                if matches!(self.peek().kind, TokenKind::Newline | TokenKind::EndOfInput) {
                    break;
                }
                if !(self.peek().kind == TokenKind::Identifier && self.peek_at(1).is(TokenKind::Operator, "=")) {
                    for s in self.simple_list(Ctx::TopLevel)? {
                        items.push(Item::Stmt(s));
                    }
                    return Ok(());
                }
            }
            return self.expect_newline();
        }
        for s in self.statement(Ctx::TopLevel)? {
            items.push(Item::Stmt(s));
        }
        Ok(())
    }

    fn top_level_binding(&mut self) -> PResult<Item> {
        let loc = self.loc();
        let name = self.expect_ident()?;
        self.expect(TokenKind::Operator, "=")?;
        if self.at_kw("Param") || self.at_kw("Var") {
            let kind = if self.advance().text == "Param" { DeclKind::Param } else { DeclKind::Var };
            self.expect_punct("(")?;
            let domain = self.expr()?;
            self.expect_punct(")")?;
            let mut dims = Vec::new();
            if self.eat_punct("[") {
                dims = self.expr_list("]")?;
                self.expect_punct("]")?;
                if dims.is_empty() {
                    return self.error("empty dimension list", &["expression"]);
                }
            }
            Ok(Item::Decl(Decl { name, kind, domain, dims, loc }))
        } else {
            let value = self.expr()?;
            Ok(Item::Const(ConstDecl { name, value, loc }))
        }
    }

    fn function(&mut self) -> PResult<FuncDef> {
        let mut signature = None;
        let loc = self.loc();
        if self.eat_punct("@") {
            if !(self.peek().kind == TokenKind::Identifier && self.peek().text == "CompileMe") {
                return self.error("unknown decorator", &["`CompileMe`"]);
            }
            self.advance();
            self.expect_punct("(")?;
            self.expect_punct("[")?;
            let ins = self.expr_list("]")?;
            self.expect_punct("]")?;
            self.expect_punct(",")?;
            let out = self.expr()?;
            self.expect_punct(")")?;
            self.expect_newline()?;
            signature = Some((ins, out));
        }
        let def_loc = if signature.is_some() { loc } else { self.loc() };
        self.expect_kw("def")?;
        let name = self.expect_ident()?;
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if !self.at_punct(")") {
            loop {
                params.push(self.expect_ident()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        self.expect_punct(":")?;
        let body = self.suite(Ctx::Function)?;
        Ok(FuncDef { name, params, signature, body, loc: def_loc })
    }

    fn suite(&mut self, ctx: Ctx) -> PResult<Vec<Stmt>> {
        if self.peek().kind == TokenKind::Newline {
            self.advance();
            if self.peek().kind != TokenKind::Indent {
                return self.error("expected an indented block", &["indent"]);
            }
            self.advance();
            let mut body = Vec::new();
            while self.peek().kind != TokenKind::Dedent && self.peek().kind != TokenKind::EndOfInput {
                if self.peek().kind == TokenKind::Newline {
                    self.advance();
                    continue;
                }
                body.extend(self.statement(ctx)?);
            }
            if self.peek().kind == TokenKind::Dedent {
                self.advance();
            }
            Ok(body)
        } else {
            self.simple_list(ctx)
        }
    }

    fn statement(&mut self, ctx: Ctx) -> PResult<Vec<Stmt>> {
        let inner = if ctx == Ctx::Function { Ctx::Function } else { Ctx::Block };
        if self.at_kw("if") {
            self.advance();
            return Ok(vec![self.if_rest(inner)?]);
        }
        if self.at_kw("for") {
            let loc = self.loc();
            self.advance();
            let var = self.expect_ident()?;
            self.expect_kw("in")?;
            self.expect_kw("range")?;
            self.expect_punct("(")?;
            let first = self.expr()?;
            let (start, end) = if self.eat_punct(",") {
                (Some(first), self.expr()?)
            } else {
                (None, first)
            };
            self.expect_punct(")")?;
            self.expect_punct(":")?;
            let body = self.suite(inner)?;
            return Ok(vec![Stmt { kind: StmtKind::For { var, start, end, body }, loc }]);
        }
        if self.at_kw("with") {
            let loc = self.loc();
            self.advance();
            let source = self.expr()?;
            self.expect_kw("as")?;
            let var = self.expect_ident()?;
            self.expect_punct(":")?;
            let body = self.suite(inner)?;
            return Ok(vec![Stmt { kind: StmtKind::With { source, var, body }, loc }]);
        }
        if self.at_kw("def") || self.at_punct("@") {
            return self.error("function definitions are only allowed at top level", &["statement"]);
        }
        self.simple_list(ctx)
    }

    fn if_rest(&mut self, ctx: Ctx) -> PResult<Stmt> {
        let loc = self.toks[self.pos - 1].clone();
        let loc = Loc::new(loc.line, loc.column);
        let cond = self.expr()?;
        self.expect_punct(":")?;
        let then_body = self.suite(ctx)?;
        let else_body = if self.at_kw("elif") {
            self.advance();
            vec![self.if_rest(ctx)?]
        } else if self.at_kw("else") {
            self.advance();
            self.expect_punct(":")?;
            self.suite(ctx)?
        } else {
            Vec::new()
        };
        Ok(Stmt { kind: StmtKind::If { cond, then_body, else_body }, loc })
    }

    fn simple_list(&mut self, ctx: Ctx) -> PResult<Vec<Stmt>> {
        let mut out = vec![self.simple(ctx)?];
        while self.eat_punct(";") {
            if matches!(self.peek().kind, TokenKind::Newline | TokenKind::EndOfInput) {
                break;
            }
            out.push(self.simple(ctx)?);
        }
        self.expect_newline()?;
        Ok(out)
    }

    fn simple(&mut self, ctx: Ctx) -> PResult<Stmt> {
        let loc = self.loc();
        if self.at_kw("return") {
            self.advance();
            let e = self.expr()?;
            return Ok(Stmt { kind: StmtKind::Return(e), loc });
        }
        if self.peek().kind == TokenKind::Identifier && self.peek_at(1).is(TokenKind::Operator, "=") {
            if ctx != Ctx::Function {
                return self.error("declarations and constants are only allowed at top level", &["statement"]);
            }
            let name = self.expect_ident()?;
            self.advance();
            let value = self.expr()?;
            return Ok(Stmt { kind: StmtKind::Assign { name, value }, loc });
        }
        if self.peek().kind != TokenKind::Identifier {
            return self.error("unexpected token", &["statement"]);
        }
        let target = self.target()?;
        self.expect_punct(".")?;
        let method = self.expect_ident()?;
        self.expect_punct("(")?;
        let value = self.expr()?;
        self.expect_punct(")")?;
        let kind = match method.as_str() {
            "set_to" => StmtKind::SetTo { target, value },
            "set_to_constant" => StmtKind::SetToConstant { target, value },
            "observe_value" => StmtKind::ObserveValue { target, value },
            _ => {
                self.pos -= 1;
                return self.error(format!("unknown method `{method}`"), &["set_to", "set_to_constant", "observe_value"]);
            }
        };
        Ok(Stmt { kind, loc })
    }

    fn target(&mut self) -> PResult<Expr> {
        let name = self.expect_ident()?;
        if self.eat_punct("[") {
            let idx = self.expr_list("]")?;
            self.expect_punct("]")?;
            if idx.is_empty() {
                return self.error("empty index", &["expression"]);
            }
            Ok(Expr::Index(name, idx))
        } else {
            Ok(Expr::Name(name))
        }
    }

    fn expr_list(&mut self, close: &str) -> PResult<Vec<Expr>> {
        let mut out = Vec::new();
        if self.at_punct(close) {
            return Ok(out);
        }
        loop {
            out.push(self.expr()?);
            if !self.eat_punct(",") || self.at_punct(close) {
                break;
            }
        }
        Ok(out)
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        let then = self.or_expr()?;
        if self.at_kw("if") {
            self.advance();
            let cond = self.or_expr()?;
            self.expect_kw("else")?;
            let otherwise = self.expr()?;
            return Ok(Expr::Cond { then: Box::new(then), cond: Box::new(cond), otherwise: Box::new(otherwise) });
        }
        Ok(then)
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        let mut e = self.and_expr()?;
        while self.at_kw("or") {
            self.advance();
            let r = self.and_expr()?;
            e = Expr::Or(Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut e = self.cmp_expr()?;
        while self.at_kw("and") {
            self.advance();
            let r = self.cmp_expr()?;
            e = Expr::And(Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn cmp_expr(&mut self) -> PResult<Expr> {
        let e = self.add_expr()?;
        let op = if self.peek().kind == TokenKind::Operator {
            match self.peek().text.as_str() {
                "==" => Some(CmpOp::Eq),
                "!=" => Some(CmpOp::Ne),
                "<" => Some(CmpOp::Lt),
                ">" => Some(CmpOp::Gt),
                "<=" => Some(CmpOp::Le),
                ">=" => Some(CmpOp::Ge),
                _ => None,
            }
        } else {
            None
        };
        match op {
            Some(op) => {
                self.advance();
                let r = self.add_expr()?;
                Ok(Expr::compare(op, e, r))
            }
            None => Ok(e),
        }
    }

    fn add_expr(&mut self) -> PResult<Expr> {
        let mut e = self.mul_expr()?;
        loop {
            let op = match (&self.peek().kind, self.peek().text.as_str()) {
                (TokenKind::Operator, "+") => BinOp::Add,
                (TokenKind::Operator, "-") => BinOp::Sub,
                _ => break,
            };
            self.advance();
            let r = self.mul_expr()?;
            e = Expr::binary(op, e, r);
        }
        Ok(e)
    }

    fn mul_expr(&mut self) -> PResult<Expr> {
        let mut e = self.unary()?;
        loop {
            let op = match (&self.peek().kind, self.peek().text.as_str()) {
                (TokenKind::Operator, "*") => BinOp::Mul,
                (TokenKind::Operator, "/") => BinOp::Div,
                (TokenKind::Operator, "%") => BinOp::Mod,
                _ => break,
            };
            self.advance();
            let r = self.unary()?;
            e = Expr::binary(op, e, r);
        }
        Ok(e)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.at_kw("not") {
            self.advance();
            let e = self.unary()?;
            return Ok(Expr::Not(Box::new(e)));
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<Expr> {
        let t = self.peek().clone();
        match t.kind {
            TokenKind::Integer => {
                self.advance();
                match t.text.parse::<i64>() {
                    Ok(v) => Ok(Expr::Int(v)),
                    Err(_) => self.error("integer literal too large", &["integer"]),
                }
            }
            TokenKind::Identifier => {
                self.advance();
                if self.eat_punct("[") {
                    let idx = self.expr_list("]")?;
                    self.expect_punct("]")?;
                    if idx.is_empty() {
                        return self.error("empty index", &["expression"]);
                    }
                    Ok(Expr::Index(t.text, idx))
                } else if self.eat_punct("(") {
                    let args = self.expr_list(")")?;
                    self.expect_punct(")")?;
                    Ok(Expr::Call(t.text, args))
                } else {
                    Ok(Expr::Name(t.text))
                }
            }
            TokenKind::Punctuation if t.text == "(" => {
                self.advance();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            _ => self.error("expected an expression", &["integer", "identifier", "`(`", "`not`"]),
        }
    }
}

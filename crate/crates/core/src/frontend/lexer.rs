use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Keyword,
    Identifier,
    Integer,
    Operator,
    Punctuation,
    Newline,
    Indent,
    Dedent,
    EndOfInput,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub line: usize,
    pub column: usize,
}

impl Token {
    pub fn is(&self, kind: TokenKind, text: &str) -> bool {
        self.kind == kind && self.text == text
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TokenKind::Newline => write!(f, "newline"),
            TokenKind::Indent => write!(f, "indent"),
            TokenKind::Dedent => write!(f, "dedent"),
            TokenKind::EndOfInput => write!(f, "end of input"),
            _ => write!(f, "`{}`", self.text),
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{line}:{column}: {message}")]
pub struct LexError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

pub const KEYWORDS: &[&str] = &[
    "Param", "Var", "def", "return", "if", "elif", "else", "for", "in", "range", "with", "as",
    "and", "or", "not",
];

const TWO_CHAR_OPS: &[&str] = &["==", "!=", "<=", ">="];
const ONE_CHAR_OPS: &[char] = &['+', '-', '*', '/', '%', '<', '>', '='];
const PUNCT: &[char] = &['(', ')', '[', ']', ',', ':', ';', '.', '@'];

fn err(line: usize, column: usize, message: impl Into<String>) -> LexError {
    LexError { line, column, message: message.into() }
}

/// Splits DSL source into tokens with Python-style INDENT/DEDENT handling.
///
/// Any consistent indentation width is accepted; tabs in indentation are not.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut tokens = Vec::new();
    let mut indents: Vec<usize> = vec![0];
    let mut depth = 0usize;
    let mut last_line = 1;

    for (idx, raw) in source.split('\n').enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        let chars: Vec<char> = line.chars().collect();
        let mut pos = 0;

        if depth == 0 {
            let mut width = 0;
            while pos < chars.len() && (chars[pos] == ' ' || chars[pos] == '\t') {
                if chars[pos] == '\t' {
                    let rest: String = chars[pos..].iter().collect();
                    if !rest.trim().is_empty() && !rest.trim_start().starts_with('#') {
                        return Err(err(line_no, pos + 1, "tab character in indentation"));
                    }
                }
                width += 1;
                pos += 1;
            }
            let rest = &chars[pos..];
            let blank = rest.iter().all(|c| c.is_whitespace());
            let comment = rest.first() == Some(&'#');
            if blank {
                continue;
            }
            if comment {
                check_comment(rest, line_no, pos + 1)?;
                continue;
            }
            let current = *indents.last().unwrap();
            if width > current {
                indents.push(width);
                tokens.push(Token { kind: TokenKind::Indent, text: String::new(), line: line_no, column: 1 });
            } else if width < current {
                while *indents.last().unwrap() > width {
                    indents.pop();
                    tokens.push(Token { kind: TokenKind::Dedent, text: String::new(), line: line_no, column: 1 });
                }
                if *indents.last().unwrap() != width {
                    return Err(err(line_no, 1, "inconsistent dedent level"));
                }
            }
        }

        while pos < chars.len() {
            let c = chars[pos];
            let col = pos + 1;
            if c == ' ' || c == '\t' {
                pos += 1;
                continue;
            }
            if c == '#' {
                check_comment(&chars[pos..], line_no, col)?;
                break;
            }
            if c.is_ascii_digit() {
                let start = pos;
                while pos < chars.len() && chars[pos].is_ascii_digit() {
                    pos += 1;
                }
                if pos < chars.len() && (chars[pos].is_alphabetic() || chars[pos] == '_') {
                    return Err(err(line_no, pos + 1, "malformed integer literal"));
                }
                let text: String = chars[start..pos].iter().collect();
                tokens.push(Token { kind: TokenKind::Integer, text, line: line_no, column: col });
                continue;
            }
            if c.is_alphabetic() || c == '_' {
                let start = pos;
                while pos < chars.len() && (chars[pos].is_alphanumeric() || chars[pos] == '_') {
                    pos += 1;
                }
                let text: String = chars[start..pos].iter().collect();
                let kind = if KEYWORDS.contains(&text.as_str()) {
                    TokenKind::Keyword
                } else {
                    TokenKind::Identifier
                };
                tokens.push(Token { kind, text, line: line_no, column: col });
                continue;
            }
            if pos + 1 < chars.len() {
                let pair: String = chars[pos..pos + 2].iter().collect();
                if TWO_CHAR_OPS.contains(&pair.as_str()) {
                    tokens.push(Token { kind: TokenKind::Operator, text: pair, line: line_no, column: col });
                    pos += 2;
                    continue;
                }
            }
            if ONE_CHAR_OPS.contains(&c) {
                tokens.push(Token { kind: TokenKind::Operator, text: c.to_string(), line: line_no, column: col });
                pos += 1;
                continue;
            }
            if PUNCT.contains(&c) {
                match c {
                    '(' | '[' => depth += 1,
                    ')' | ']' => depth = depth.saturating_sub(1),
                    _ => {}
                }
                tokens.push(Token { kind: TokenKind::Punctuation, text: c.to_string(), line: line_no, column: col });
                pos += 1;
                continue;
            }
            return Err(err(line_no, col, format!("unexpected character `{c}`")));
        }

        if depth == 0 {
            if let Some(last) = tokens.last() {
                if !matches!(last.kind, TokenKind::Newline | TokenKind::Indent | TokenKind::Dedent) {
                    tokens.push(Token {
                        kind: TokenKind::Newline,
                        text: String::new(),
                        line: line_no,
                        column: chars.len() + 1,
                    });
                }
            }
        }
    }

    if let Some(last) = tokens.last().filter(|_| depth == 0) {
        if !matches!(last.kind, TokenKind::Newline | TokenKind::Dedent) {
            tokens.push(Token { kind: TokenKind::Newline, text: String::new(), line: last_line, column: 1 });
        }
    }
    while indents.len() > 1 {
        indents.pop();
        tokens.push(Token { kind: TokenKind::Dedent, text: String::new(), line: last_line, column: 1 });
    }
    tokens.push(Token { kind: TokenKind::EndOfInput, text: String::new(), line: last_line, column: 1 });
    Ok(tokens)
}

fn check_comment(rest: &[char], line: usize, column: usize) -> Result<(), LexError> {
    let body: String = rest[1..].iter().collect();
    if super::preprocess::directive_in_comment(&body).is_some() {
        return Err(err(line, column, "unexpanded preprocessor directive; run preprocess first"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<(TokenKind, String)> {
        tokenize(src).unwrap().into_iter().map(|t| (t.kind, t.text)).collect()
    }

    #[test]
    fn param_declaration() {
        use TokenKind::*;
        let toks = kinds("x = Param(2)");
        let expect = [
            (Identifier, "x"),
            (Operator, "="),
            (Keyword, "Param"),
            (Punctuation, "("),
            (Integer, "2"),
            (Punctuation, ")"),
            (Newline, ""),
            (EndOfInput, ""),
        ];
        assert_eq!(toks.len(), expect.len());
        for (got, want) in toks.iter().zip(expect.iter()) {
            assert_eq!(got.0, want.0);
            assert_eq!(got.1, want.1);
        }
    }

    #[test]
    fn for_header_ends_in_colon_newline() {
        let toks = kinds("for k in range(K):");
        let n = toks.len();
        assert_eq!(toks[n - 3], (TokenKind::Punctuation, ":".to_string()));
        assert_eq!(toks[n - 2].0, TokenKind::Newline);
        assert_eq!(toks[0], (TokenKind::Keyword, "for".to_string()));
        assert_eq!(toks[3], (TokenKind::Keyword, "range".to_string()));
    }

    #[test]
    fn tab_indent_rejected() {
        let e = tokenize("x = Param(2)\n\ty.set_to(x)").unwrap_err();
        assert!(e.message.contains("tab"));
        assert_eq!(e.line, 2);
    }

    #[test]
    fn bad_dedent_rejected() {
        let e = tokenize("if a == 0:\n        x.set_to(1)\n    y.set_to(1)\n").unwrap_err();
        assert!(e.message.contains("dedent"));
    }

    #[test]
    fn indents_balance_and_comments_drop() {
        let src = "for i in range(3):  # loop\n    if x == 1:\n        y.set_to(0)\n# trailing\n";
        let toks = tokenize(src).unwrap();
        let ind = toks.iter().filter(|t| t.kind == TokenKind::Indent).count();
        let ded = toks.iter().filter(|t| t.kind == TokenKind::Dedent).count();
        assert_eq!(ind, 2);
        assert_eq!(ind, ded);
        assert!(toks.iter().all(|t| !t.text.contains("loop")));
    }

    #[test]
    fn brackets_join_lines() {
        let toks = tokenize("f(a,\n  b)\n").unwrap();
        assert_eq!(toks.iter().filter(|t| t.kind == TokenKind::Newline).count(), 1);
    }

    #[test]
    fn leftover_directive_is_an_error() {
        assert!(tokenize("const_K = #__HYPERPARAM_const_K__\n").is_err());
        assert!(tokenize("#__IMPORT_OBSERVED_INPUTS__\n").is_err());
    }
}

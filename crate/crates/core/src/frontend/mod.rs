//! Lexing, preprocessing, parsing and semantic checking of model sources.

pub mod ast;
pub mod check;
pub mod eval;
pub mod lexer;
pub mod parser;
pub mod preprocess;
pub mod printer;

use std::collections::BTreeMap;

use thiserror::Error;

pub use ast::Ast;
pub use check::{check_semantics, CheckedAst, SemanticDiagnostic, Severity};
pub use lexer::{tokenize, LexError, Token, TokenKind};
pub use parser::{parse, ParseError};
pub use preprocess::{preprocess, PreprocessError};
pub use printer::print_ast;

#[derive(Debug, Error)]
pub enum FrontendError {
    #[error("preprocess: {0}")]
    Preprocess(#[from] PreprocessError),
    #[error("lex: {0}")]
    Lex(#[from] LexError),
    #[error("parse: {0}")]
    Parse(#[from] ParseError),
    #[error("{}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))]
    Semantic(Vec<SemanticDiagnostic>),
}

/// Parses already-preprocessed source text.
pub fn parse_source(source: &str) -> Result<Ast, FrontendError> {
    Ok(parse(&tokenize(source)?)?)
}

/// Runs the whole front end on a model plus its companion inputs.
pub fn compile_source(
    source: &str,
    hyperparams: &BTreeMap<String, i64>,
    input_snippet: Option<&str>,
    output_snippet: Option<&str>,
) -> Result<CheckedAst, FrontendError> {
    let text = preprocess(source, hyperparams, input_snippet, output_snippet)?;
    let ast = parse_source(&text)?;
    check_semantics(&ast).map_err(FrontendError::Semantic)
}

use std::collections::BTreeMap;

use thiserror::Error;

pub const INPUTS_DIRECTIVE: &str = "__IMPORT_OBSERVED_INPUTS__";
pub const OUTPUTS_DIRECTIVE: &str = "__IMPORT_OBSERVED_OUTPUTS__";
const HYPER_PREFIX: &str = "__HYPERPARAM_";

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum PreprocessError {
    #[error("line {line}: unbound hyperparameter in directive `#__HYPERPARAM_{name}__`")]
    UnboundHyperparam { line: usize, name: String },
    #[error("line {line}: directive `#{directive}` present but no snippet was supplied")]
    MissingSnippet { line: usize, directive: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Directive {
    Hyperparam(String),
    ImportInputs,
    ImportOutputs,
}

/// Recognizes a directive that forms the entire body of a comment.
pub fn directive_in_comment(body: &str) -> Option<Directive> {
    let body = body.trim();
    if body == INPUTS_DIRECTIVE {
        return Some(Directive::ImportInputs);
    }
    if body == OUTPUTS_DIRECTIVE {
        return Some(Directive::ImportOutputs);
    }
    let name = body.strip_prefix(HYPER_PREFIX)?.strip_suffix("__")?;
    let mut chars = name.chars();
    let first = chars.next()?;
    if (first.is_ascii_alphabetic() || first == '_') && chars.all(|c| c.is_ascii_alphanumeric() || c == '_') {
        Some(Directive::Hyperparam(name.to_string()))
    } else {
        None
    }
}

/// Expands hyperparameter and I/O import directives.
///
/// A snippet of `None` means the caller supplied nothing; that is an error only
/// if the corresponding directive occurs.
pub fn preprocess(
    source: &str,
    hyperparams: &BTreeMap<String, i64>,
    input_snippet: Option<&str>,
    output_snippet: Option<&str>,
) -> Result<String, PreprocessError> {
    let mut out = String::with_capacity(source.len());
    let lines: Vec<&str> = source.split('\n').collect();
    for (idx, line) in lines.iter().enumerate() {
        let line_no = idx + 1;
        let is_last = idx + 1 == lines.len();
        let Some(hash) = line.find('#') else {
            out.push_str(line);
            if !is_last {
                out.push('\n');
            }
            continue;
        };
        let (code, comment) = line.split_at(hash);
        match directive_in_comment(&comment[1..]) {
            Some(Directive::Hyperparam(name)) => {
                let value = hyperparams
                    .get(&name)
                    .ok_or(PreprocessError::UnboundHyperparam { line: line_no, name: name.clone() })?;
                out.push_str(code);
                out.push_str(&value.to_string());
            }
            Some(d @ (Directive::ImportInputs | Directive::ImportOutputs)) if code.trim().is_empty() => {
                let (snippet, name) = match d {
                    Directive::ImportInputs => (input_snippet, INPUTS_DIRECTIVE),
                    _ => (output_snippet, OUTPUTS_DIRECTIVE),
                };
                let snippet = snippet.ok_or(PreprocessError::MissingSnippet {
                    line: line_no,
                    directive: name.to_string(),
                })?;
                out.push_str(&reindent(snippet, code));
            }
            _ => out.push_str(line),
        }
        if !is_last {
            out.push('\n');
        }
    }
    Ok(out)
}

fn reindent(snippet: &str, indent: &str) -> String {
    let lines: Vec<&str> = snippet.lines().filter(|l| !l.trim().is_empty()).collect();
    let common = lines
        .iter()
        .map(|l| l.len() - l.trim_start_matches(' ').len())
        .min()
        .unwrap_or(0);
    lines
        .iter()
        .map(|l| format!("{indent}{}", &l[common..]))
        .collect::<Vec<_>>()
        .join("\n")
}

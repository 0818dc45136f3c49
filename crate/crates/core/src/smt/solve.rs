use std::io::Read;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use super::ident_map;
use crate::frontend::CheckedAst;
use crate::interp::check_consistency;
use crate::ir::{GatedFactorGraph, ParamAssignment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SmtStatus {
    Sat,
    Unsat,
    Unknown,
}

#[derive(Debug, Clone, Serialize)]
pub struct SmtOutcome {
    pub status: SmtStatus,
    #[serde(skip)]
    pub assignment: Option<ParamAssignment>,
    pub timed_out: bool,
}

#[derive(Debug, Error)]
pub enum SmtError {
    #[error("SMT solver `{command}` failed: {message}\n{output}")]
    Process { command: String, message: String, output: String },
    #[error("malformed SMT model: {0}")]
    MalformedModel(String),
    #[error("the solver's model fails verification; the translation is unsound")]
    Verification(ParamAssignment),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn parse_sexps(text: &str) -> Result<Vec<Sexp>, String> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '(' => {
                chars.next();
                stack.push(Vec::new());
            }
            ')' => {
                chars.next();
                let list = stack.pop().unwrap();
                stack.last_mut().ok_or("unbalanced `)`")?.push(Sexp::List(list));
            }
            ';' => {
                while chars.next().is_some_and(|c| c != '\n') {}
            }
            '"' => {
                chars.next();
                let mut s = String::from("\"");
                for c in chars.by_ref() {
                    s.push(c);
                    if c == '"' {
                        break;
                    }
                }
                stack.last_mut().unwrap().push(Sexp::Atom(s));
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            _ => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' {
                        break;
                    }
                    s.push(c);
                    chars.next();
                }
                stack.last_mut().unwrap().push(Sexp::Atom(s));
            }
        }
        if stack.is_empty() {
            return Err("unbalanced `)`".into());
        }
    }
    if stack.len() != 1 {
        return Err("unbalanced `(`".into());
    }
    Ok(stack.pop().unwrap())
}

fn int_value(s: &Sexp) -> Option<i64> {
    match s {
        Sexp::Atom(a) => a.parse().ok(),
        Sexp::List(l) => match l.as_slice() {
            [Sexp::Atom(m), x] if m == "-" => int_value(x).map(|v| -v),
            _ => None,
        },
    }
}

/// Reads the status line and the `(define-fun v () Int n)` entries of a
/// solver's output.
pub fn parse_model(output: &str) -> Result<(SmtStatus, Vec<(String, i64)>), SmtError> {
    let sexps = parse_sexps(output).map_err(SmtError::MalformedModel)?;
    let mut status = None;
    let mut values = Vec::new();
    for s in &sexps {
        match s {
            Sexp::Atom(a) if status.is_none() => {
                status = Some(match a.as_str() {
                    "sat" => SmtStatus::Sat,
                    "unsat" => SmtStatus::Unsat,
                    "unknown" | "timeout" => SmtStatus::Unknown,
                    other => return Err(SmtError::MalformedModel(format!("unexpected `{other}`"))),
                });
            }
            Sexp::List(items) if status == Some(SmtStatus::Sat) => {
                let items = match items.first() {
                    Some(Sexp::Atom(m)) if m == "model" => &items[1..],
                    _ => &items[..],
                };
                for d in items {
                    let Sexp::List(parts) = d else { continue };
                    match parts.as_slice() {
                        [Sexp::Atom(k), Sexp::Atom(name), Sexp::List(args), Sexp::Atom(ty), value]
                            if k == "define-fun" && args.is_empty() && ty == "Int" =>
                        {
                            let v = int_value(value)
                                .ok_or_else(|| SmtError::MalformedModel(format!("value of `{name}`")))?;
                            values.push((name.clone(), v));
                        }
                        [Sexp::Atom(k), ..] if k == "define-fun" => {}
                        _ => return Err(SmtError::MalformedModel("expected define-fun entries".into())),
                    }
                }
            }
            // `(error ...)` lines after unsat from `(get-model)`
            Sexp::List(items) if matches!(items.first(), Some(Sexp::Atom(e)) if e == "error") => {}
            _ => {}
        }
    }
    let status = status.ok_or_else(|| SmtError::MalformedModel("no status line".into()))?;
    Ok((status, values))
}

fn scratch_path() -> PathBuf {
    static COUNTER: AtomicUsize = AtomicUsize::new(0);
    let n = COUNTER.fetch_add(1, Ordering::Relaxed);
    std::env::temp_dir().join(format!("tpt-smt-{}-{}.smt2", std::process::id(), n))
}

fn run(command: &str, path: &PathBuf, timeout: Option<Duration>) -> Result<(String, bool), SmtError> {
    let err = |message: String, output: String| SmtError::Process { command: command.into(), message, output };
    let mut parts = command.split_whitespace();
    let program = parts.next().ok_or_else(|| err("empty command".into(), String::new()))?;
    let mut child = Command::new(program)
        .args(parts)
        .arg(path)
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| err(e.to_string(), String::new()))?;
    let mut stdout = child.stdout.take().unwrap();
    let mut stderr = child.stderr.take().unwrap();
    let out_reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = stdout.read_to_string(&mut s);
        s
    });
    let err_reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = stderr.read_to_string(&mut s);
        s
    });
    let start = Instant::now();
    let mut timed_out = false;
    let status = loop {
        if let Some(st) = child.try_wait()? {
            break Some(st);
        }
        if timeout.is_some_and(|t| start.elapsed() > t) {
            let _ = child.kill();
            let _ = child.wait();
            timed_out = true;
            break None;
        }
        std::thread::sleep(Duration::from_millis(5));
    };
    let out = out_reader.join().unwrap_or_default();
    let errs = err_reader.join().unwrap_or_default();
    if let Some(st) = status {
        // SMT solvers commonly exit non-zero after `(get-model)` on unsat.
        if !st.success() && !out.trim_start().starts_with("unsat") && !out.trim_start().starts_with("sat") {
            return Err(err(format!("exit status {st}"), format!("{out}{errs}")));
        }
    }
    Ok((out, timed_out))
}

/// Runs `<command> <file.smt2>` on the script and decodes the parameter
/// cells of a `sat` model into an assignment checked by the interpreter.
pub fn solve_smt(
    checked: &CheckedAst,
    graph: &GatedFactorGraph,
    script: &str,
    command: &str,
    timeout: Option<Duration>,
) -> Result<SmtOutcome, SmtError> {
    let path = scratch_path();
    std::fs::write(&path, script)?;
    let result = run(command, &path, timeout);
    let _ = std::fs::remove_file(&path);
    let (out, timed_out) = result?;
    if timed_out {
        return Ok(SmtOutcome { status: SmtStatus::Unknown, assignment: None, timed_out });
    }
    let (status, values) = parse_model(&out)?;
    if status != SmtStatus::Sat {
        return Ok(SmtOutcome { status, assignment: None, timed_out });
    }
    let idents = ident_map(checked);
    let mut a = ParamAssignment::default();
    for (name, v) in values {
        let Some(&cell) = idents.get(&name) else { continue };
        if graph.free_params.contains(&cell) {
            if v < 0 || v as usize >= graph.variables[cell].domain {
                return Err(SmtError::MalformedModel(format!("`{name}` = {v} is outside its domain")));
            }
            a.values.insert(cell, v as u32);
        }
    }
    // Solvers may omit unconstrained cells; any value is then valid.
    for &p in &graph.free_params {
        a.values.entry(p).or_insert(0);
    }
    if !check_consistency(graph, &a) {
        return Err(SmtError::Verification(a));
    }
    Ok(SmtOutcome { status, assignment: Some(a), timed_out })
}

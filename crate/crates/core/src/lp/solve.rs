use std::collections::HashMap;
use std::path::PathBuf;
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::Serialize;
use thiserror::Error;

use super::{write_lp, LpModel};
use crate::interp::{check_consistency, enumerate_solve, EnumResult};
use crate::ir::{GatedFactorGraph, ParamAssignment};

pub const INTEGRALITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LpBackend {
    External(String),
    Enumeration,
}

#[derive(Debug, Clone, Serialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub backend: LpBackend,
    #[serde(skip)]
    pub values: Vec<f64>,
    pub objective: f64,
    /// All free-parameter marginals are 0/1 within [`INTEGRALITY_TOL`].
    pub integral: bool,
    #[serde(skip)]
    pub assignment: Option<ParamAssignment>,
    /// Interpreter verdict on the extracted assignment.
    pub verified: Option<bool>,
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("LP solver `{command}` failed: {message}\n{output}")]
    Solver { command: String, message: String, output: String },
    #[error("cannot parse LP solution: {0}")]
    Parse(String),
    #[error("enumeration budget of {0} programs exhausted")]
    Budget(u64),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// Parses `<column> <value>` lines and a status line into a dense vector.
/// Columns the solver leaves out are zero.
pub fn parse_solution(model: &LpModel, text: &str) -> Result<(LpStatus, Vec<f64>), LpError> {
    let index: HashMap<&str, usize> = model.columns.iter().enumerate().map(|(i, c)| (c.name.as_str(), i)).collect();
    let mut values = vec![0.0; model.columns.len()];
    let mut status = None;
    for (n, line) in text.lines().enumerate() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            [] => {}
            [s] => {
                status = Some(match *s {
                    "optimal" => LpStatus::Optimal,
                    "infeasible" => LpStatus::Infeasible,
                    "unbounded" => LpStatus::Unbounded,
                    other => return Err(LpError::Parse(format!("line {}: unknown status `{other}`", n + 1))),
                })
            }
            [name, value] => {
                let col = *index
                    .get(name)
                    .ok_or_else(|| LpError::Parse(format!("line {}: unknown column `{name}`", n + 1)))?;
                values[col] = value.parse().map_err(|_| LpError::Parse(format!("line {}: bad value `{value}`", n + 1)))?;
            }
            _ => return Err(LpError::Parse(format!("line {}: expected `<column> <value>`", n + 1))),
        }
    }
    let status = status.ok_or_else(|| LpError::Parse("no status line".into()))?;
    Ok((status, values))
}

fn scratch_path(ext: &str) -> PathBuf {
    static COUNTER: AtomicUsize = AtomicUsize::new(0);
    let n = COUNTER.fetch_add(1, Ordering::Relaxed);
    std::env::temp_dir().join(format!("tpt-lp-{}-{}.{}", std::process::id(), n, ext))
}

fn run_external(model: &LpModel, command: &str) -> Result<(LpStatus, Vec<f64>), LpError> {
    let lp = scratch_path("lp");
    let sol = scratch_path("sol");
    {
        let mut w = std::io::BufWriter::new(std::fs::File::create(&lp)?);
        write_lp(model, &mut w)?;
        std::io::Write::flush(&mut w)?;
    }
    let mut parts = command.split_whitespace();
    let program = parts.next().ok_or_else(|| LpError::Solver {
        command: command.into(),
        message: "empty command".into(),
        output: String::new(),
    })?;
    let result = Command::new(program).args(parts).arg(&lp).arg(&sol).output();
    let _ = std::fs::remove_file(&lp);
    let out = result.map_err(|e| LpError::Solver { command: command.into(), message: e.to_string(), output: String::new() })?;
    let captured = format!("{}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr));
    if !out.status.success() {
        let _ = std::fs::remove_file(&sol);
        return Err(LpError::Solver { command: command.into(), message: format!("exit status {}", out.status), output: captured });
    }
    let text = std::fs::read_to_string(&sol)
        .map_err(|e| LpError::Solver { command: command.into(), message: e.to_string(), output: captured })?;
    let _ = std::fs::remove_file(&sol);
    parse_solution(model, &text)
}

/// Solves with an external solver when `solver` is given, otherwise falls
/// back to enumerating programs and reporting the integral vertex of the
/// first consistent one.
pub fn solve_lp(
    g: &GatedFactorGraph,
    model: &LpModel,
    solver: Option<&str>,
    enumeration_budget: u64,
) -> Result<LpSolution, LpError> {
    let (status, values, backend) = match solver {
        Some(cmd) => {
            let (s, v) = run_external(model, cmd)?;
            (s, v, LpBackend::External(cmd.to_string()))
        }
        None => match enumerate_solve(g, enumeration_budget) {
            EnumResult::Found(a) => (LpStatus::Optimal, model.integral_point(g, &a), LpBackend::Enumeration),
            EnumResult::NoSolution => (LpStatus::Infeasible, vec![0.0; model.columns.len()], LpBackend::Enumeration),
            EnumResult::BudgetExhausted => return Err(LpError::Budget(enumeration_budget)),
        },
    };
    let optimal = status == LpStatus::Optimal;
    let assignment = if optimal { model.extract_assignment(g, &values, INTEGRALITY_TOL) } else { None };
    let verified = assignment.as_ref().map(|a| check_consistency(g, a));
    Ok(LpSolution {
        status,
        backend,
        objective: if optimal { model.objective_value(&values) } else { 0.0 },
        integral: assignment.is_some(),
        values,
        assignment,
        verified,
    })
}

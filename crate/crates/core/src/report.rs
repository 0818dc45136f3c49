//! Backend dispatch and the JSON report shared by the command-line tools.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::bench::{BenchError, TaskSpec};
use crate::fmgd::{run_seed, FmgdHyperparams, Trainer};
use crate::interp::{check_consistency, enumerate_solve, search_space_size, EnumResult};
use crate::ir::{compile_graph, IrError, ParamAssignment};
use crate::lp::{build_lp, solve_lp, LpError, LpOptions, LpStatus};
use crate::smt::{solve_smt, translate, SmtError, SmtStatus, TranslateError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Fmgd,
    Lp,
    Smt,
    Enum,
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "fmgd" => Backend::Fmgd,
            "lp" | "ilp" => Backend::Lp,
            "smt" => Backend::Smt,
            "enum" => Backend::Enum,
            other => return Err(format!("unknown backend `{other}`")),
        })
    }
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Fmgd => "fmgd",
            Backend::Lp => "lp",
            Backend::Smt => "smt",
            Backend::Enum => "enum",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportStatus {
    /// A program consistent with every example was found and verified.
    Solved,
    /// The backend proved that no program exists.
    NoSolution,
    /// The backend stopped without an answer.
    Unknown,
}

impl ReportStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            ReportStatus::Solved => 0,
            ReportStatus::NoSolution | ReportStatus::Unknown => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveReport {
    pub backend: Backend,
    pub status: ReportStatus,
    /// Free parameter values by cell name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assignment: Option<BTreeMap<String, u32>>,
    pub metrics: BTreeMap<String, Value>,
    pub wall_ms: f64,
}

/// Checks a JSON value against the report schema.
pub fn validate_report(v: &Value) -> Result<(), String> {
    let obj = v.as_object().ok_or("report is not an object")?;
    for k in obj.keys() {
        if !["backend", "status", "assignment", "metrics", "wall_ms"].contains(&k.as_str()) {
            return Err(format!("unexpected key `{k}`"));
        }
    }
    let backend = obj.get("backend").and_then(Value::as_str).ok_or("`backend` must be a string")?;
    Backend::from_str(backend)?;
    let status = obj.get("status").and_then(Value::as_str).ok_or("`status` must be a string")?;
    if !["solved", "no_solution", "unknown"].contains(&status) {
        return Err(format!("bad status `{status}`"));
    }
    match obj.get("assignment") {
        None => {
            if status == "solved" {
                return Err("a solved report needs an assignment".into());
            }
        }
        Some(a) => {
            let a = a.as_object().ok_or("`assignment` must be an object")?;
            if a.values().any(|x| x.as_u64().is_none()) {
                return Err("assignment values must be non-negative integers".into());
            }
        }
    }
    if !obj.get("metrics").is_some_and(Value::is_object) {
        return Err("`metrics` must be an object".into());
    }
    if !obj.get("wall_ms").and_then(Value::as_f64).is_some_and(|w| w >= 0.0) {
        return Err("`wall_ms` must be a non-negative number".into());
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub seed: u64,
    pub restarts: usize,
    pub hyperparams: FmgdHyperparams,
    pub lp_solver: Option<String>,
    pub lp_options: LpOptions,
    pub smt_solver: Option<String>,
    pub timeout: Option<Duration>,
    pub enumeration_budget: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            seed: 0,
            restarts: 1,
            hyperparams: FmgdHyperparams::vanilla(),
            lp_solver: None,
            lp_options: LpOptions { milp: true, ..LpOptions::default() },
            smt_solver: None,
            timeout: None,
            enumeration_budget: 1 << 24,
        }
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("{0}")]
    Task(#[from] BenchError),
    #[error("{0}")]
    Frontend(#[from] crate::frontend::FrontendError),
    #[error("{0}")]
    Ir(#[from] IrError),
    #[error("{0}")]
    Translate(#[from] TranslateError),
    #[error("{0}")]
    Smt(#[from] SmtError),
    #[error("{0}")]
    Lp(#[from] LpError),
    #[error("no SMT solver configured; pass --solver or set TPT_SMT_SOLVER")]
    NoSmtSolver,
    #[error("{backend} returned an assignment the interpreter rejects")]
    Unverified { backend: &'static str },
}

/// Runs one backend on a task and reports the outcome. Every reported
/// solution has been checked by the interpreter.
pub fn solve_task(task: &TaskSpec, backend: Backend, opts: &SolveOptions) -> Result<SolveReport, SolveError> {
    let start = Instant::now();
    let checked = task.compile()?;
    let g = compile_graph(&checked)?;
    let mut metrics = BTreeMap::new();
    metrics.insert("variables".into(), json!(g.variables.len()));
    metrics.insert("factors".into(), json!(g.factors.len()));
    metrics.insert("gates".into(), json!(g.gates.len()));
    metrics.insert("free_params".into(), json!(g.free_params.len()));
    metrics.insert("log2_search_space".into(), json!(g.log2_search_space()));
    let (status, assignment): (ReportStatus, Option<ParamAssignment>) = match backend {
        Backend::Enum => match enumerate_solve(&g, opts.enumeration_budget) {
            EnumResult::Found(a) => (ReportStatus::Solved, Some(a)),
            EnumResult::NoSolution => (ReportStatus::NoSolution, None),
            EnumResult::BudgetExhausted => {
                metrics.insert("budget".into(), json!(opts.enumeration_budget));
                (ReportStatus::Unknown, None)
            }
        },
        Backend::Smt => {
            let cmd = opts.smt_solver.as_deref().ok_or(SolveError::NoSmtSolver)?;
            let script = translate(&checked)?;
            metrics.insert("assertions".into(), json!(script.assertions.len()));
            let out = solve_smt(&checked, &g, &script.text(), cmd, opts.timeout)?;
            metrics.insert("timed_out".into(), json!(out.timed_out));
            match out.status {
                SmtStatus::Sat => (ReportStatus::Solved, out.assignment),
                SmtStatus::Unsat => (ReportStatus::NoSolution, None),
                SmtStatus::Unknown => (ReportStatus::Unknown, None),
            }
        }
        Backend::Lp => {
            let model = build_lp(&g, opts.lp_options);
            metrics.insert("columns".into(), json!(model.columns.len()));
            metrics.insert("rows".into(), json!(model.rows.len()));
            metrics.insert("milp".into(), json!(opts.lp_options.milp));
            let sol = solve_lp(&g, &model, opts.lp_solver.as_deref(), opts.enumeration_budget)?;
            metrics.insert("lp_backend".into(), serde_json::to_value(&sol.backend).unwrap());
            metrics.insert("objective".into(), json!(sol.objective));
            metrics.insert("integral".into(), json!(sol.integral));
            match sol.status {
                LpStatus::Optimal => match sol.assignment {
                    Some(a) => (ReportStatus::Solved, Some(a)),
                    None => (ReportStatus::Unknown, None),
                },
                LpStatus::Infeasible => (ReportStatus::NoSolution, None),
                LpStatus::Unbounded => (ReportStatus::Unknown, None),
            }
        }
        Backend::Fmgd => {
            let h = &opts.hyperparams;
            let runs: Vec<_> = (0..opts.restarts.max(1))
                .into_par_iter()
                .map_init(
                    || Trainer::new(&g),
                    |tr, k| {
                        let r = tr.train(h, run_seed(opts.seed, k));
                        (r.converged(), r.epochs, r.final_loss, r.assignment)
                    },
                )
                .collect();
            let first = runs.iter().position(|r| r.0);
            metrics.insert("restarts".into(), json!(runs.len()));
            metrics.insert("successful_restarts".into(), json!(runs.iter().filter(|r| r.0).count()));
            metrics.insert("epochs".into(), json!(runs.iter().map(|r| r.1).collect::<Vec<_>>()));
            metrics.insert("final_loss".into(), json!(runs.iter().map(|r| r.2).collect::<Vec<_>>()));
            match first {
                Some(k) => {
                    metrics.insert("restart".into(), json!(k));
                    (ReportStatus::Solved, Some(runs[k].3.clone()))
                }
                None => (ReportStatus::Unknown, None),
            }
        }
    };
    if status == ReportStatus::Solved {
        let a = assignment.as_ref().expect("solved without an assignment");
        if !check_consistency(&g, a) {
            return Err(SolveError::Unverified { backend: backend.name() });
        }
    }
    if let Some(n) = search_space_size(&g) {
        metrics.insert("search_space".into(), json!(n));
    }
    Ok(SolveReport {
        backend,
        status,
        assignment: assignment.map(|a| a.named(&g)),
        metrics,
        wall_ms: start.elapsed().as_secs_f64() * 1000.0,
    })
}

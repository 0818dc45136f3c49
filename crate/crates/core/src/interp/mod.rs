//! Reference semantics for fully parameterized programs and a brute-force
//! synthesizer built on top of them.

mod reference;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ir::{FactorId, GatedFactorGraph, Item, ParamAssignment, TableEntry, VarId, ROOT};

pub use reference::{execute_ast, AstExecution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Fault {
    /// A factor on the executed path produced a value outside its output domain.
    Leak { factor: FactorId, value: i64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationResult {
    pub var: VarId,
    pub expected: u32,
    pub actual: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecTrace {
    /// Assignments in execution order, inputs and parameters first.
    pub assignments: Vec<(VarId, u32)>,
    /// Final value of every cell; `None` where the cell was never assigned.
    pub values: Vec<Option<u32>>,
    pub observations: Vec<ObservationResult>,
    pub fault: Option<Fault>,
}

impl ExecTrace {
    pub fn consistent(&self) -> bool {
        self.fault.is_none() && self.observations.iter().all(|o| o.actual == Some(o.expected))
    }
}

/// Runs the program described by `graph` with the given parameters. `inputs`
/// overrides (or extends) the graph's own `set_to_constant` sites.
pub fn execute(graph: &GatedFactorGraph, params: &ParamAssignment, inputs: &[(VarId, u32)]) -> ExecTrace {
    let mut values = vec![None; graph.variables.len()];
    let mut assignments = Vec::new();
    for &(v, x) in &graph.inputs {
        values[v] = Some(x);
    }
    for &(v, x) in inputs {
        values[v] = Some(x);
    }
    for &p in &graph.free_params {
        if values[p].is_none() {
            values[p] = params.get(p);
        }
    }
    for (v, x) in values.iter().enumerate() {
        if let Some(x) = x {
            assignments.push((v, *x));
        }
    }
    let mut ex = Exec { graph, values, assignments: Some(assignments) };
    let fault = ex.gate(ROOT).err();
    let observations = graph
        .observations
        .iter()
        .map(|&(var, expected)| ObservationResult { var, expected, actual: ex.values[var] })
        .collect();
    ExecTrace { assignments: ex.assignments.unwrap(), values: ex.values, observations, fault }
}

struct Exec<'a> {
    graph: &'a GatedFactorGraph,
    values: Vec<Option<u32>>,
    assignments: Option<Vec<(VarId, u32)>>,
}

impl<'a> Exec<'a> {
    fn gate(&mut self, id: usize) -> Result<(), Fault> {
        for item in &self.graph.gates[id].items {
            match *item {
                Item::Factor(fid) => {
                    let f = &self.graph.factors[fid];
                    let mut k = 0;
                    for (&v, &d) in f.inputs.iter().zip(&f.table.in_domains) {
                        let x = self.values[v].expect("factor input read before assignment") as usize;
                        k = k * d + x;
                    }
                    match f.table.entries[k] {
                        TableEntry::Value(x) => {
                            self.values[f.output] = Some(x);
                            if let Some(a) = &mut self.assignments {
                                a.push((f.output, x));
                            }
                        }
                        TableEntry::OutOfRange(value) => return Err(Fault::Leak { factor: fid, value }),
                    }
                }
                Item::Family(fam) => {
                    let fam = &self.graph.families[fam];
                    let c = self.values[fam.cond].expect("gate condition read before assignment");
                    if let Some(&(_, child)) = fam.branches.iter().find(|(v, _)| *v == c) {
                        self.gate(child)?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Reusable checker that avoids reallocating per call.
pub struct Checker<'a> {
    graph: &'a GatedFactorGraph,
    base: Vec<Option<u32>>,
    exec: Exec<'a>,
}

impl<'a> Checker<'a> {
    pub fn new(graph: &'a GatedFactorGraph) -> Self {
        let mut base = vec![None; graph.variables.len()];
        for &(v, x) in &graph.inputs {
            base[v] = Some(x);
        }
        Checker { graph, exec: Exec { graph, values: base.clone(), assignments: None }, base }
    }

    /// Consistency of the assignment given as values for `graph.free_params`
    /// in order.
    pub fn check_values(&mut self, free_values: &[u32]) -> bool {
        self.exec.values.copy_from_slice(&self.base);
        for (&p, &x) in self.graph.free_params.iter().zip(free_values) {
            self.exec.values[p] = Some(x);
        }
        if self.exec.gate(ROOT).is_err() {
            return false;
        }
        self.graph.observations.iter().all(|&(v, x)| self.exec.values[v] == Some(x))
    }

    pub fn check(&mut self, params: &ParamAssignment) -> bool {
        let vals: Vec<u32> = self.graph.free_params.iter().map(|&p| params.get(p).unwrap_or(0)).collect();
        params.is_total(self.graph) && self.check_values(&vals)
    }
}

/// True iff the program produces every observed value without a fault.
pub fn check_consistency(graph: &GatedFactorGraph, params: &ParamAssignment) -> bool {
    Checker::new(graph).check(params)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EnumResult {
    Found(ParamAssignment),
    NoSolution,
    BudgetExhausted,
}

/// Number of free parameter configurations, or `None` if it overflows u64.
pub fn search_space_size(graph: &GatedFactorGraph) -> Option<u64> {
    graph.free_params.iter().try_fold(1u64, |acc, &p| acc.checked_mul(graph.variables[p].domain as u64))
}

fn decode(graph: &GatedFactorGraph, mut k: u64, out: &mut [u32]) {
    for (i, &p) in graph.free_params.iter().enumerate().rev() {
        let d = graph.variables[p].domain as u64;
        out[i] = (k % d) as u32;
        k /= d;
    }
}

const CHUNK: u64 = 1 << 12;

/// Scans assignments in lexicographic order (first free parameter most
/// significant) and returns the first consistent one.
pub fn enumerate_solve(graph: &GatedFactorGraph, max_enumerations: u64) -> EnumResult {
    let total = search_space_size(graph);
    let limit = total.map_or(max_enumerations, |t| t.min(max_enumerations));
    let n_chunks = limit.div_ceil(CHUNK);
    let found = (0..n_chunks).into_par_iter().find_map_first(|c| {
        let mut checker = Checker::new(graph);
        let mut vals = vec![0u32; graph.free_params.len()];
        (c * CHUNK..((c + 1) * CHUNK).min(limit)).find(|&k| {
            decode(graph, k, &mut vals);
            checker.check_values(&vals)
        })
    });
    match found {
        Some(k) => {
            let mut vals = vec![0u32; graph.free_params.len()];
            decode(graph, k, &mut vals);
            EnumResult::Found(ParamAssignment {
                values: graph.free_params.iter().copied().zip(vals).collect(),
            })
        }
        None if total.is_some_and(|t| t <= max_enumerations) => EnumResult::NoSolution,
        None => EnumResult::BudgetExhausted,
    }
}

/// Every consistent assignment; intended for small graphs in tests.
pub fn enumerate_all(graph: &GatedFactorGraph, max_enumerations: u64) -> Option<Vec<ParamAssignment>> {
    let total = search_space_size(graph).filter(|&t| t <= max_enumerations)?;
    let mut checker = Checker::new(graph);
    let mut vals = vec![0u32; graph.free_params.len()];
    let mut out = Vec::new();
    for k in 0..total {
        decode(graph, k, &mut vals);
        if checker.check_values(&vals) {
            out.push(ParamAssignment { values: graph.free_params.iter().copied().zip(vals.iter().copied()).collect() });
        }
    }
    Some(out)
}

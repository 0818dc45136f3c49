//! The gated local-polytope relaxation as a (mixed integer) linear program.
//!
//! Every variable gets one unary marginal per gate it is active in, every
//! factor a marginal over its table, and every ghost site a ghost marginal
//! that absorbs the mass of the branches where the variable is undefined.

mod emit;
mod solve;

use std::collections::HashMap;

use serde::Serialize;

use crate::interp::execute;
use crate::ir::{FactorId, FamilyId, GateId, GatedFactorGraph, Item, ParamAssignment, TableEntry, VarId, ROOT};

pub use emit::{emit_lp, write_lp};
pub use solve::{parse_solution, solve_lp, LpBackend, LpError, LpSolution, LpStatus, INTEGRALITY_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LpOptions {
    /// Mark the global marginals of free parameters as binary.
    pub milp: bool,
    /// Drop factor configurations that disagree with the factor's function.
    pub hard: bool,
    /// Instantiate ghost marginals.
    pub ghosts: bool,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions { milp: false, hard: true, ghosts: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ColumnKind {
    Unary { var: VarId, gate: GateId, value: u32 },
    Factor { factor: FactorId, config: u32, output: u32 },
    Ghost { var: VarId, family: FamilyId, value: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RowClass {
    /// A scope's unary marginal sums to its gate marginal (1 at global scope).
    Normalization,
    /// A factor marginal summed over all but one neighbour equals that
    /// neighbour's unary marginal.
    FactorConsistency,
    /// A parent marginal is the sum of its children's and the ghost's.
    ParentChild,
    /// A ghost marginal sums to the mass of the branches it stands in for.
    GhostNormalization,
    /// Inputs and observations put no mass on other values.
    Pin,
}

/// `sum coeffs = rhs`
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub name: String,
    pub class: RowClass,
    pub coeffs: Vec<(usize, i32)>,
    pub rhs: i32,
}

#[derive(Debug, Clone)]
pub struct LpModel {
    pub options: LpOptions,
    pub columns: Vec<Column>,
    pub rows: Vec<Row>,
    pub objective: Vec<(usize, i32)>,
    pub binary: Vec<usize>,
    unary: HashMap<(VarId, GateId), usize>,
    ghost: HashMap<(VarId, FamilyId), usize>,
    factor_cols: Vec<Vec<(u32, u32, usize)>>,
    domains: Vec<usize>,
}

impl LpModel {
    /// First column of the unary marginal of `var` in `gate`.
    pub fn unary(&self, var: VarId, gate: GateId) -> Option<usize> {
        self.unary.get(&(var, gate)).copied()
    }

    pub fn ghost(&self, var: VarId, family: FamilyId) -> Option<usize> {
        self.ghost.get(&(var, family)).copied()
    }

    pub fn n_ghost_columns(&self) -> usize {
        self.columns.iter().filter(|c| matches!(c.kind, ColumnKind::Ghost { .. })).count()
    }

    pub fn rows_of(&self, class: RowClass) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(move |r| r.class == class)
    }

    /// Row residuals `sum coeffs * x - rhs` at the point `x`.
    pub fn residuals(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.coeffs.iter().map(|&(c, a)| a as f64 * x[c]).sum::<f64>() - r.rhs as f64)
            .collect()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|&(c, a)| a as f64 * x[c]).sum()
    }

    /// The integral point induced by executing the program with `params`:
    /// indicator marginals in every gate on the executed path, zeros
    /// elsewhere, and ghosts carrying the value of variables where their
    /// branch does not define them. Unassigned variables read as 0.
    pub fn integral_point(&self, g: &GatedFactorGraph, params: &ParamAssignment) -> Vec<f64> {
        let trace = execute(g, params, &[]);
        let val = |v: VarId| trace.values[v].unwrap_or(0);
        let on: Vec<bool> = g
            .gates
            .iter()
            .map(|gate| gate.path_condition.iter().all(|&(c, x)| trace.values[c] == Some(x)))
            .collect();
        let mut x = vec![0.0; self.columns.len()];
        for (&(var, gate), &col) in &self.unary {
            if on[gate] {
                x[col + val(var) as usize] = 1.0;
            }
        }
        for (&(var, fam), &col) in &self.ghost {
            let f = &g.families[fam];
            let c = val(f.cond);
            let active = f.branches.iter().any(|&(k, b)| k == c && g.active[b].contains(&var));
            if on[f.gate] && !active {
                x[col + val(var) as usize] = 1.0;
            }
        }
        for (j, f) in g.factors.iter().enumerate() {
            if !on[f.gate] {
                continue;
            }
            let ins: Vec<usize> = f.inputs.iter().map(|&v| val(v) as usize).collect();
            let k = f.table.config_index(&ins) as u32;
            let y = val(f.output);
            if let Ok(i) = self.factor_cols[j].binary_search_by_key(&(k, y), |&(a, b, _)| (a, b)) {
                x[self.factor_cols[j][i].2] = 1.0;
            }
        }
        x
    }

    /// Reads a parameter assignment off the global marginals of the free
    /// parameters, if they are all 0/1 within `tol`.
    pub fn extract_assignment(&self, g: &GatedFactorGraph, x: &[f64], tol: f64) -> Option<ParamAssignment> {
        let mut a = ParamAssignment::default();
        for &p in &g.free_params {
            let col = self.unary(p, ROOT)?;
            let mut hot = None;
            for k in 0..self.domains[p] {
                let v = x[col + k];
                if (v - 1.0).abs() <= tol {
                    if hot.is_some() {
                        return None;
                    }
                    hot = Some(k as u32);
                } else if v.abs() > tol {
                    return None;
                }
            }
            a.values.insert(p, hot?);
        }
        Some(a)
    }
}

fn path_name(g: &GatedFactorGraph, gate: GateId) -> String {
    let pc = &g.gates[gate].path_condition;
    if pc.is_empty() {
        return "root".into();
    }
    let conds: Vec<String> = pc.iter().map(|&(c, x)| format!("{}.{}", g.variables[c].ident, x)).collect();
    format!("{}.g{}", conds.join("_"), gate)
}

struct Builder<'a> {
    g: &'a GatedFactorGraph,
    m: LpModel,
    ghost_set: HashMap<(VarId, FamilyId), ()>,
}

pub fn build_lp(g: &GatedFactorGraph, options: LpOptions) -> LpModel {
    let mut b = Builder {
        g,
        m: LpModel {
            options,
            columns: Vec::new(),
            rows: Vec::new(),
            objective: Vec::new(),
            binary: Vec::new(),
            unary: HashMap::new(),
            ghost: HashMap::new(),
            factor_cols: vec![Vec::new(); g.factors.len()],
            domains: g.variables.iter().map(|v| v.domain).collect(),
        },
        ghost_set: g.ghost_sites.iter().map(|s| ((s.var, s.family), ())).collect(),
    };
    let all: Vec<VarId> = (0..g.variables.len()).collect();
    for &v in &all {
        b.unary_site(v, ROOT);
    }
    for &v in &all {
        let col = b.m.unary[&(v, ROOT)];
        b.row(format!("norm_{}_root", g.variables[v].ident), RowClass::Normalization, b.span(col, v), 1);
    }
    let pins: Vec<(VarId, u32, &str)> = g
        .inputs
        .iter()
        .map(|&(v, x)| (v, x, "in"))
        .chain(g.observations.iter().map(|&(v, x)| (v, x, "obs")))
        .collect();
    for (v, x, tag) in pins {
        let col = b.m.unary[&(v, ROOT)];
        let coeffs: Vec<(usize, i32)> =
            (0..g.variables[v].domain).filter(|&k| k != x as usize).map(|k| (col + k, 1)).collect();
        if !coeffs.is_empty() {
            b.row(format!("pin_{}_{}", tag, g.variables[v].ident), RowClass::Pin, coeffs, 0);
        }
    }
    b.gate(ROOT);
    if options.milp {
        for &p in &g.free_params {
            let col = b.m.unary[&(p, ROOT)];
            b.m.binary.extend(col..col + g.variables[p].domain);
        }
    }
    b.m
}

impl<'a> Builder<'a> {
    fn column(&mut self, name: String, kind: ColumnKind) -> usize {
        self.m.columns.push(Column { name, kind });
        self.m.columns.len() - 1
    }

    fn unary_site(&mut self, var: VarId, gate: GateId) -> usize {
        let v = &self.g.variables[var];
        let path = path_name(self.g, gate);
        let first = self.m.columns.len();
        for x in 0..v.domain as u32 {
            self.column(format!("mu_{}_{}_{}", v.ident, path, x), ColumnKind::Unary { var, gate, value: x });
        }
        self.m.unary.insert((var, gate), first);
        first
    }

    fn span(&self, col: usize, var: VarId) -> Vec<(usize, i32)> {
        (0..self.g.variables[var].domain).map(|k| (col + k, 1)).collect()
    }

    fn row(&mut self, name: String, class: RowClass, coeffs: Vec<(usize, i32)>, rhs: i32) {
        self.m.rows.push(Row { name, class, coeffs, rhs });
    }

    fn gate(&mut self, gid: GateId) {
        let g = self.g;
        for item in &g.gates[gid].items {
            match *item {
                Item::Factor(j) => self.factor(j),
                Item::Family(fid) => self.family(fid),
            }
        }
    }

    fn factor(&mut self, j: FactorId) {
        let g = self.g;
        let f = &g.factors[j];
        let hard = self.m.options.hard;
        let mut cols = Vec::new();
        for k in 0..f.table.n_configs() {
            let target = match f.table.entries[k] {
                TableEntry::Value(y) => Some(y),
                TableEntry::OutOfRange(_) => None,
            };
            for y in 0..f.table.out_domain as u32 {
                if hard && target != Some(y) {
                    continue;
                }
                let col = self.column(
                    format!("s_{}_{}_{}", j, k, y),
                    ColumnKind::Factor { factor: j, config: k as u32, output: y },
                );
                if target == Some(y) {
                    self.m.objective.push((col, 1));
                }
                cols.push((k as u32, y, col));
            }
        }
        let neighbours: Vec<VarId> = f.inputs.iter().copied().chain(std::iter::once(f.output)).collect();
        let mut buckets: Vec<Vec<Vec<(usize, i32)>>> =
            neighbours.iter().map(|&v| vec![Vec::new(); g.variables[v].domain]).collect();
        for &(k, y, c) in &cols {
            let config = f.table.config(k as usize);
            for (pos, &x) in config.iter().enumerate() {
                buckets[pos][x].push((c, 1));
            }
            buckets[f.inputs.len()][y as usize].push((c, 1));
        }
        for (pos, (&v, bucket)) in neighbours.iter().zip(buckets).enumerate() {
            let ucol = self.m.unary[&(v, f.gate)];
            for (x, mut coeffs) in bucket.into_iter().enumerate() {
                coeffs.push((ucol + x, -1));
                self.row(format!("cons_{}_{}_{}", j, pos, x), RowClass::FactorConsistency, coeffs, 0);
            }
        }
        self.m.factor_cols[j] = cols;
    }

    fn family(&mut self, fid: FamilyId) {
        let g = self.g;
        let fam = &g.families[fid];
        let parent = fam.gate;
        let cond_col = self.m.unary[&(fam.cond, parent)];
        for &(k, b) in &fam.branches {
            let sites: Vec<VarId> = g.active[b].iter().copied().collect();
            for &v in &sites {
                self.unary_site(v, b);
            }
            let path = path_name(g, b);
            for &v in &sites {
                let col = self.m.unary[&(v, b)];
                let mut coeffs = self.span(col, v);
                coeffs.push((cond_col + k as usize, -1));
                self.row(format!("norm_{}_{}", g.variables[v].ident, path), RowClass::Normalization, coeffs, 0);
            }
            self.gate(b);
        }
        let mut union: Vec<VarId> = fam.branches.iter().flat_map(|&(_, b)| g.active[b].iter().copied()).collect();
        union.sort_unstable();
        union.dedup();
        let ppath = path_name(g, parent);
        for v in union {
            let ghost = if self.m.options.ghosts && self.ghost_set.contains_key(&(v, fid)) {
                let first = self.m.columns.len();
                for x in 0..g.variables[v].domain as u32 {
                    self.column(
                        format!("gh_{}_{}_F{}_{}", g.variables[v].ident, ppath, fid, x),
                        ColumnKind::Ghost { var: v, family: fid, value: x },
                    );
                }
                self.m.ghost.insert((v, fid), first);
                Some(first)
            } else {
                None
            };
            let pcol = self.m.unary[&(v, parent)];
            for x in 0..g.variables[v].domain {
                let mut coeffs = vec![(pcol + x, 1)];
                for &(_, b) in &fam.branches {
                    if let Some(&c) = self.m.unary.get(&(v, b)) {
                        coeffs.push((c + x, -1));
                    }
                }
                if let Some(gc) = ghost {
                    coeffs.push((gc + x, -1));
                }
                self.row(
                    format!("pc_{}_{}_F{}_{}", g.variables[v].ident, ppath, fid, x),
                    RowClass::ParentChild,
                    coeffs,
                    0,
                );
            }
            if let Some(gc) = ghost {
                let mut coeffs = self.span(gc, v);
                for k in 0..g.variables[fam.cond].domain as u32 {
                    let active = fam.branches.iter().any(|&(kk, b)| kk == k && g.active[b].contains(&v));
                    if !active {
                        coeffs.push((cond_col + k as usize, -1));
                    }
                }
                self.row(
                    format!("ghn_{}_{}_F{}", g.variables[v].ident, ppath, fid),
                    RowClass::GhostNormalization,
                    coeffs,
                    0,
                );
            }
        }
    }
}

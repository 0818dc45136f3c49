use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::unroll::{unroll, UExpr, UStmt, UnrollError};
use crate::frontend::ast::{DeclKind, Loc};
use crate::frontend::eval::{apply_binop, call_function, call_raw, EvalFault, FuncInfo, Symbols};
use crate::frontend::CheckedAst;

pub type VarId = usize;
pub type GateId = usize;
pub type FamilyId = usize;
pub type FactorId = usize;

pub const ROOT: GateId = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TableEntry {
    Value(u32),
    /// The computed value (or the offending intermediate) lies outside the
    /// output domain.
    OutOfRange(i64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorTable {
    pub in_domains: Vec<usize>,
    pub out_domain: usize,
    /// Row-major over input configurations, first input slowest.
    pub entries: Vec<TableEntry>,
}

impl FactorTable {
    pub fn n_configs(&self) -> usize {
        self.in_domains.iter().product()
    }

    pub fn has_leak(&self) -> bool {
        self.entries.iter().any(|e| matches!(e, TableEntry::OutOfRange(_)))
    }

    pub fn config_index(&self, inputs: &[usize]) -> usize {
        inputs.iter().zip(&self.in_domains).fold(0, |acc, (&x, &d)| acc * d + x)
    }

    pub fn config(&self, mut k: usize) -> Vec<usize> {
        let mut out = vec![0; self.in_domains.len()];
        for i in (0..out.len()).rev() {
            out[i] = k % self.in_domains[i];
            k /= self.in_domains[i];
        }
        out
    }

    pub fn lookup(&self, inputs: &[usize]) -> TableEntry {
        self.entries[self.config_index(inputs)]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    /// `tape[0,3,2]`
    pub name: String,
    /// `tape_0_3_2`
    pub ident: String,
    pub domain: usize,
    pub kind: DeclKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorKind {
    Copy,
    Constant,
    Function,
}

#[derive(Debug, Clone)]
pub struct Factor {
    pub output: VarId,
    pub inputs: Vec<VarId>,
    pub table: FactorTable,
    pub gate: GateId,
    pub kind: FactorKind,
    pub loc: Loc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Item {
    Factor(FactorId),
    Family(FamilyId),
}

#[derive(Debug, Clone)]
pub struct Gate {
    pub id: GateId,
    pub parent: Option<GateId>,
    pub family: Option<FamilyId>,
    pub condition: Option<(VarId, u32)>,
    pub path_condition: Vec<(VarId, u32)>,
    pub children: Vec<GateId>,
    /// Factors and nested gate families in execution order.
    pub items: Vec<Item>,
}

/// An `if`/`elif` chain on one condition variable.
#[derive(Debug, Clone)]
pub struct Family {
    pub id: FamilyId,
    pub gate: GateId,
    pub cond: VarId,
    pub branches: Vec<(u32, GateId)>,
    /// Variables assigned in every branch of a family that covers the whole
    /// condition domain; these are defined in the enclosing scope afterwards.
    pub exports: Vec<VarId>,
}

impl Family {
    pub fn covers_domain(&self, domain: usize) -> bool {
        self.branches.len() == domain
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GhostSite {
    pub var: VarId,
    pub family: FamilyId,
}

#[derive(Debug, Clone)]
pub struct GatedFactorGraph {
    pub variables: Vec<Variable>,
    pub params: Vec<VarId>,
    pub free_params: Vec<VarId>,
    pub inputs: Vec<(VarId, u32)>,
    pub observations: Vec<(VarId, u32)>,
    pub gates: Vec<Gate>,
    pub families: Vec<Family>,
    pub factors: Vec<Factor>,
    pub active: Vec<BTreeSet<VarId>>,
    pub ghost_sites: Vec<GhostSite>,
}

/// Values for the free parameter cells; pinned parameters come from the
/// graph's inputs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParamAssignment {
    pub values: BTreeMap<VarId, u32>,
}

impl ParamAssignment {
    pub fn get(&self, v: VarId) -> Option<u32> {
        self.values.get(&v).copied()
    }

    pub fn named(&self, g: &GatedFactorGraph) -> BTreeMap<String, u32> {
        self.values.iter().map(|(&v, &x)| (g.variables[v].name.clone(), x)).collect()
    }

    pub fn from_named(g: &GatedFactorGraph, named: &BTreeMap<String, u32>) -> Result<Self, String> {
        let mut values = BTreeMap::new();
        for &p in &g.free_params {
            let name = &g.variables[p].name;
            let x = *named.get(name).ok_or_else(|| format!("assignment lacks parameter {name}"))?;
            if x as usize >= g.variables[p].domain {
                return Err(format!("value {x} for {name} is outside its domain"));
            }
            values.insert(p, x);
        }
        for k in named.keys() {
            if !g.free_params.iter().any(|&p| &g.variables[p].name == k) {
                return Err(format!("`{k}` is not a free parameter"));
            }
        }
        Ok(ParamAssignment { values })
    }

    pub fn is_total(&self, g: &GatedFactorGraph) -> bool {
        g.free_params.iter().all(|p| self.values.get(p).is_some_and(|&x| (x as usize) < g.variables[*p].domain))
            && self.values.len() == g.free_params.len()
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum IrError {
    #[error("{0}")]
    Unroll(#[from] UnrollError),
    #[error("{loc}: tabulation failed: {message}")]
    Tabulation { loc: Loc, message: String },
    #[error("{loc}: {var} can leave its domain outside any gate")]
    LeakAtGlobalScope { loc: Loc, var: String },
    #[error("{loc}: {var} is read before it is assigned")]
    UndefinedRead { loc: Loc, var: String },
    #[error("{loc}: {var} is read after a gate but is not assigned on every branch")]
    PartialRead { loc: Loc, var: String },
    #[error("{loc}: {message}")]
    Scope { loc: Loc, message: String },
}

impl GatedFactorGraph {
    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn is_pinned(&self, v: VarId) -> bool {
        self.inputs.iter().any(|&(x, _)| x == v)
    }

    /// log2 of the number of free parameter configurations.
    pub fn log2_search_space(&self) -> f64 {
        self.free_params.iter().map(|&p| (self.variables[p].domain as f64).log2()).sum()
    }

    pub fn is_ancestor_or_self(&self, anc: GateId, mut g: GateId) -> bool {
        loop {
            if g == anc {
                return true;
            }
            match self.gates[g].parent {
                Some(p) => g = p,
                None => return false,
            }
        }
    }
}

/// Builds the table of a `@CompileMe` function over its declared input domains.
pub fn tabulate_function(syms: &Symbols, f: &FuncInfo) -> Result<FactorTable, EvalFault> {
    let mut table =
        FactorTable { in_domains: f.in_domains.clone(), out_domain: f.out_domain, entries: Vec::new() };
    let n = table.n_configs();
    table.entries.reserve(n);
    for k in 0..n {
        let args: Vec<i64> = table.config(k).into_iter().map(|x| x as i64).collect();
        let v = call_raw(syms, f, &args)?;
        table.entries.push(if v >= 0 && (v as usize) < f.out_domain {
            TableEntry::Value(v as u32)
        } else {
            TableEntry::OutOfRange(v)
        });
    }
    Ok(table)
}

/// Evaluates an unrolled expression given values for its cells.
pub fn eval_uexpr(syms: &Symbols, e: &UExpr, val: &dyn Fn(usize) -> i64) -> Result<i64, EvalFault> {
    Ok(match e {
        UExpr::Int(v) => *v,
        UExpr::Cell(c) => val(*c),
        UExpr::Call(f, args) => {
            let mut vals = Vec::with_capacity(args.len());
            for a in args {
                vals.push(eval_uexpr(syms, a, val)?);
            }
            call_function(syms, f, &vals)?
        }
        UExpr::Binary(op, a, b) => apply_binop(*op, eval_uexpr(syms, a, val)?, eval_uexpr(syms, b, val)?)?,
        UExpr::Compare(op, a, b) => op.apply(eval_uexpr(syms, a, val)?, eval_uexpr(syms, b, val)?) as i64,
        UExpr::Not(a) => (eval_uexpr(syms, a, val)? == 0) as i64,
        UExpr::And(a, b) => (eval_uexpr(syms, a, val)? != 0 && eval_uexpr(syms, b, val)? != 0) as i64,
        UExpr::Or(a, b) => (eval_uexpr(syms, a, val)? != 0 || eval_uexpr(syms, b, val)? != 0) as i64,
        UExpr::Cond { then, cond, otherwise } => {
            if eval_uexpr(syms, cond, val)? != 0 {
                eval_uexpr(syms, then, val)?
            } else {
                eval_uexpr(syms, otherwise, val)?
            }
        }
    })
}

/// Evaluates an unrolled right-hand side into a table entry for a target of
/// the given domain. Out-of-domain results, including those of nested calls,
/// become leak entries; genuine arithmetic faults are errors.
pub fn evaluate_entry(
    syms: &Symbols,
    e: &UExpr,
    out_domain: usize,
    val: &dyn Fn(usize) -> i64,
) -> Result<TableEntry, EvalFault> {
    match eval_uexpr(syms, e, val) {
        Ok(v) if v >= 0 && (v as usize) < out_domain => Ok(TableEntry::Value(v as u32)),
        Ok(v) => Ok(TableEntry::OutOfRange(v)),
        Err(EvalFault::OutOfRange { value, .. }) => Ok(TableEntry::OutOfRange(value)),
        Err(EvalFault::ArgOutOfRange { value, .. }) => Ok(TableEntry::OutOfRange(value)),
        Err(f) => Err(f),
    }
}

struct Frame {
    gate: GateId,
    defined: HashSet<VarId>,
    partial: HashSet<VarId>,
}

struct Builder<'a> {
    checked: &'a CheckedAst,
    g: GatedFactorGraph,
    frames: Vec<Frame>,
    used: Vec<HashSet<VarId>>,
}

/// Unrolls a checked program and builds its gated factor graph.
pub fn compile_graph(checked: &CheckedAst) -> Result<GatedFactorGraph, IrError> {
    let u = unroll(checked)?;
    build_graph(checked, &u.stmts)
}

/// Builds the gated factor graph of an unrolled program.
pub fn build_graph(checked: &CheckedAst, stmts: &[UStmt]) -> Result<GatedFactorGraph, IrError> {
    let variables: Vec<Variable> = (0..checked.n_cells)
        .map(|c| Variable {
            name: checked.cell_name(c),
            ident: checked.cell_ident(c),
            domain: checked.cell_domain(c),
            kind: checked.cell_kind(c),
        })
        .collect();
    let params: Vec<VarId> =
        (0..variables.len()).filter(|&v| variables[v].kind == DeclKind::Param).collect();
    let root = Gate {
        id: ROOT,
        parent: None,
        family: None,
        condition: None,
        path_condition: Vec::new(),
        children: Vec::new(),
        items: Vec::new(),
    };
    let mut b = Builder {
        checked,
        g: GatedFactorGraph {
            variables,
            params,
            free_params: Vec::new(),
            inputs: Vec::new(),
            observations: Vec::new(),
            gates: vec![root],
            families: Vec::new(),
            factors: Vec::new(),
            active: Vec::new(),
            ghost_sites: Vec::new(),
        },
        frames: vec![Frame { gate: ROOT, defined: HashSet::new(), partial: HashSet::new() }],
        used: vec![HashSet::new()],
    };
    for &p in &b.g.params {
        b.frames[0].defined.insert(p);
    }
    // Constants are known before anything runs, wherever they are written.
    for s in stmts {
        if let UStmt::SetToConstant { target, value, .. } = s {
            b.g.inputs.push((*target, *value as u32));
            b.frames[0].defined.insert(*target);
        }
    }
    b.block(stmts)?;
    b.finish();
    Ok(b.g)
}

impl<'a> Builder<'a> {
    fn name(&self, v: VarId) -> String {
        self.g.variables[v].name.clone()
    }

    fn current(&self) -> GateId {
        self.frames.last().unwrap().gate
    }

    fn require(&self, v: VarId, loc: Loc) -> Result<(), IrError> {
        if self.frames.iter().any(|f| f.defined.contains(&v)) {
            return Ok(());
        }
        if self.frames.iter().any(|f| f.partial.contains(&v)) {
            return Err(IrError::PartialRead { loc, var: self.name(v) });
        }
        Err(IrError::UndefinedRead { loc, var: self.name(v) })
    }

    fn block(&mut self, stmts: &[UStmt]) -> Result<(), IrError> {
        for s in stmts {
            self.stmt(s)?;
        }
        Ok(())
    }

    fn stmt(&mut self, s: &UStmt) -> Result<(), IrError> {
        let gate = self.current();
        match s {
            UStmt::SetToConstant { target, loc, .. } => {
                if gate != ROOT {
                    return Err(IrError::Scope {
                        loc: *loc,
                        message: format!("set_to_constant on {} must be at global scope", self.name(*target)),
                    });
                }
                self.used[ROOT].insert(*target);
            }
            UStmt::Observe { target, value, loc } => {
                if gate != ROOT {
                    return Err(IrError::Scope {
                        loc: *loc,
                        message: format!("observe_value on {} must be at global scope", self.name(*target)),
                    });
                }
                self.require(*target, *loc)?;
                self.g.observations.push((*target, *value as u32));
                self.used[ROOT].insert(*target);
            }
            UStmt::SetTo { target, value, loc } => {
                let inputs = value.cells();
                for &c in &inputs {
                    self.require(c, *loc)?;
                }
                let in_domains: Vec<usize> = inputs.iter().map(|&c| self.g.variables[c].domain).collect();
                let out_domain = self.g.variables[*target].domain;
                let mut table = FactorTable { in_domains, out_domain, entries: Vec::new() };
                let syms = &self.checked.symbols;
                for k in 0..table.n_configs() {
                    let cfg = table.config(k);
                    let lookup = |c: usize| cfg[inputs.iter().position(|&x| x == c).unwrap()] as i64;
                    let entry = evaluate_entry(syms, value, out_domain, &lookup)
                        .map_err(|f| IrError::Tabulation { loc: *loc, message: f.to_string() })?;
                    table.entries.push(entry);
                }
                if gate == ROOT && table.has_leak() {
                    return Err(IrError::LeakAtGlobalScope { loc: *loc, var: self.name(*target) });
                }
                let kind = match value {
                    UExpr::Cell(_) => FactorKind::Copy,
                    _ if inputs.is_empty() => FactorKind::Constant,
                    _ => FactorKind::Function,
                };
                let id = self.g.factors.len();
                self.g.factors.push(Factor { output: *target, inputs: inputs.clone(), table, gate, kind, loc: *loc });
                self.g.gates[gate].items.push(Item::Factor(id));
                let used = &mut self.used[gate];
                used.insert(*target);
                used.extend(inputs);
                self.frames.last_mut().unwrap().defined.insert(*target);
            }
            UStmt::If { cell, loc, .. } => {
                let cond = *cell;
                self.require(cond, *loc)?;
                self.used[gate].insert(cond);
                let dom = self.g.variables[cond].domain;
                let mut branches: Vec<(u32, &[UStmt])> = Vec::new();
                let mut cur = s;
                let rest: &[UStmt] = loop {
                    let UStmt::If { value, then_body, else_body, loc, .. } = cur else { unreachable!() };
                    if branches.iter().any(|(v, _)| *v as i64 == *value) {
                        return Err(IrError::Scope {
                            loc: *loc,
                            message: format!("value {value} of {} is tested twice in one chain", self.name(cond)),
                        });
                    }
                    branches.push((*value as u32, then_body));
                    match else_body.as_slice() {
                        [next @ UStmt::If { cell: c2, .. }] if *c2 == cond => cur = next,
                        other => break other,
                    }
                };
                if !rest.is_empty() {
                    for v in 0..dom as u32 {
                        if !branches.iter().any(|(x, _)| *x == v) {
                            branches.push((v, rest));
                        }
                    }
                }
                let fam = self.g.families.len();
                self.g.families.push(Family { id: fam, gate, cond, branches: Vec::new(), exports: Vec::new() });
                self.g.gates[gate].items.push(Item::Family(fam));
                let mut defined_sets = Vec::new();
                for (v, body) in branches {
                    let gid = self.g.gates.len();
                    let mut path = self.g.gates[gate].path_condition.clone();
                    path.push((cond, v));
                    self.g.gates.push(Gate {
                        id: gid,
                        parent: Some(gate),
                        family: Some(fam),
                        condition: Some((cond, v)),
                        path_condition: path,
                        children: Vec::new(),
                        items: Vec::new(),
                    });
                    self.g.gates[gate].children.push(gid);
                    self.used.push(HashSet::new());
                    self.g.families[fam].branches.push((v, gid));
                    self.frames.push(Frame { gate: gid, defined: HashSet::new(), partial: HashSet::new() });
                    self.block(body)?;
                    let f = self.frames.pop().unwrap();
                    defined_sets.push(f.defined);
                }
                let covers = self.g.families[fam].covers_domain(dom);
                let mut union: BTreeSet<VarId> = BTreeSet::new();
                for d in &defined_sets {
                    union.extend(d.iter().copied());
                }
                let exports: Vec<VarId> = if covers {
                    union.iter().copied().filter(|v| defined_sets.iter().all(|d| d.contains(v))).collect()
                } else {
                    Vec::new()
                };
                let frame = self.frames.last_mut().unwrap();
                for v in &union {
                    if exports.contains(v) {
                        frame.defined.insert(*v);
                    } else {
                        frame.partial.insert(*v);
                    }
                }
                self.g.families[fam].exports = exports;
            }
        }
        Ok(())
    }

    fn finish(&mut self) {
        let n = self.g.gates.len();
        let mut active: Vec<BTreeSet<VarId>> =
            self.used.iter().map(|u| u.iter().copied().collect()).collect();
        for gid in (1..n).rev() {
            let parent = self.g.gates[gid].parent.unwrap();
            let child = std::mem::take(&mut active[gid]);
            active[parent].extend(child.iter().copied());
            active[gid] = child;
        }
        let mut ghosts = Vec::new();
        for fam in &self.g.families {
            let dom = self.g.variables[fam.cond].domain;
            let covers = fam.covers_domain(dom);
            let mut union: BTreeSet<VarId> = BTreeSet::new();
            for &(_, gid) in &fam.branches {
                union.extend(active[gid].iter().copied());
            }
            for v in union {
                let everywhere = fam.branches.iter().all(|&(_, gid)| active[gid].contains(&v));
                if !(covers && everywhere) {
                    ghosts.push(GhostSite { var: v, family: fam.id });
                }
            }
        }
        ghosts.sort_by_key(|g| (g.family, g.var));
        self.g.active = active;
        self.g.ghost_sites = ghosts;
        let pinned: HashMap<VarId, u32> = self.g.inputs.iter().copied().collect();
        self.g.free_params = self.g.params.iter().copied().filter(|p| !pinned.contains_key(p)).collect();
    }
}

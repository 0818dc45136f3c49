use std::collections::HashMap;

use thiserror::Error;

use super::Logits;
use crate::ir::{FactorId, GateId, GatedFactorGraph, Item, TableEntry, VarId, ROOT};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("non-finite value in the marginal of {site}")]
pub struct NumericError {
    pub site: String,
}

#[derive(Debug, Clone)]
enum Op {
    Softmax { param: usize, out: usize, len: usize },
    Onehot { out: usize, value: usize },
    Factor { factor: FactorId, inputs: Vec<usize>, out: usize, leak: bool },
    GateExit { cond: usize, branches: Vec<(usize, usize)>, out: usize, len: usize },
}

/// Location of one local marginal in the flat buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Site {
    pub var: VarId,
    pub gate: GateId,
    pub offset: usize,
    pub len: usize,
}

/// The forward-marginals computation for a graph, compiled once and
/// evaluated many times.
#[derive(Debug, Clone)]
pub struct Program {
    ops: Vec<Op>,
    tables: Vec<Vec<i32>>,
    in_domains: Vec<Vec<usize>>,
    out_domains: Vec<usize>,
    pub sites: Vec<Site>,
    pub size: usize,
    /// (offset of the observed marginal, observed value)
    observations: Vec<(usize, usize)>,
    /// Offsets of the global marginals of the free parameters.
    pub param_sites: Vec<usize>,
    param_lens: Vec<usize>,
    global: HashMap<VarId, usize>,
    names: Vec<String>,
}

/// Marginals from one forward pass.
#[derive(Debug, Clone)]
pub struct MarginalTape {
    pub values: Vec<f64>,
}

impl Program {
    pub fn new(g: &GatedFactorGraph) -> Program {
        let mut p = Program {
            ops: Vec::new(),
            tables: g
                .factors
                .iter()
                .map(|f| {
                    f.table
                        .entries
                        .iter()
                        .map(|e| match e {
                            TableEntry::Value(x) => *x as i32,
                            TableEntry::OutOfRange(_) => -1,
                        })
                        .collect()
                })
                .collect(),
            in_domains: g.factors.iter().map(|f| f.table.in_domains.clone()).collect(),
            out_domains: g.factors.iter().map(|f| f.table.out_domain).collect(),
            sites: Vec::new(),
            size: 0,
            observations: Vec::new(),
            param_sites: Vec::new(),
            param_lens: Vec::new(),
            global: HashMap::new(),
            names: g.variables.iter().map(|v| v.name.clone()).collect(),
        };
        let mut scope: HashMap<VarId, usize> = HashMap::new();
        for (i, &v) in g.free_params.iter().enumerate() {
            let len = g.variables[v].domain;
            let out = p.site(v, ROOT, len);
            p.ops.push(Op::Softmax { param: i, out, len });
            p.param_sites.push(out);
            p.param_lens.push(len);
            scope.insert(v, out);
        }
        for &(v, x) in &g.inputs {
            let out = p.site(v, ROOT, g.variables[v].domain);
            p.ops.push(Op::Onehot { out, value: x as usize });
            scope.insert(v, out);
        }
        p.gate(g, ROOT, &mut scope);
        for &(v, x) in &g.observations {
            p.observations.push((scope[&v], x as usize));
        }
        p.global = scope;
        p
    }

    fn site(&mut self, var: VarId, gate: GateId, len: usize) -> usize {
        let offset = self.size;
        self.sites.push(Site { var, gate, offset, len });
        self.size += len;
        offset
    }

    fn gate(&mut self, g: &GatedFactorGraph, id: GateId, scope: &mut HashMap<VarId, usize>) {
        for item in &g.gates[id].items {
            match *item {
                Item::Factor(fid) => {
                    let f = &g.factors[fid];
                    let inputs = f.inputs.iter().map(|v| scope[v]).collect();
                    let out = self.site(f.output, id, f.table.out_domain);
                    self.ops.push(Op::Factor { factor: fid, inputs, out, leak: f.table.has_leak() });
                    scope.insert(f.output, out);
                }
                Item::Family(fam) => {
                    let fam = &g.families[fam];
                    let cond = scope[&fam.cond];
                    let mut child_scopes = Vec::new();
                    for &(value, child) in &fam.branches {
                        // Entering a gate imports the parent's marginals by reference.
                        let mut inner = scope.clone();
                        self.gate(g, child, &mut inner);
                        child_scopes.push((value, inner));
                    }
                    for &y in &fam.exports {
                        let len = g.variables[y].domain;
                        let branches = child_scopes.iter().map(|(v, s)| (*v as usize, s[&y])).collect();
                        let out = self.site(y, id, len);
                        self.ops.push(Op::GateExit { cond, branches, out, len });
                        scope.insert(y, out);
                    }
                }
            }
        }
    }

    /// Offset of the global-scope marginal of `v`, if it has one.
    pub fn global_site(&self, v: VarId) -> Option<usize> {
        self.global.get(&v).copied()
    }

    pub fn n_params(&self) -> usize {
        self.param_sites.len()
    }

    pub fn param_lens(&self) -> &[usize] {
        &self.param_lens
    }

    /// Runs the forward pass, writing every marginal into `buf`.
    pub fn forward_into(&self, logits: &Logits, buf: &mut [f64]) -> Result<(), NumericError> {
        for op in &self.ops {
            match op {
                Op::Softmax { param, out, len } => {
                    let m = &logits.m[*param];
                    let mx = m.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let mut s = 0.0;
                    for k in 0..*len {
                        let e = (m[k] - mx).exp();
                        buf[out + k] = e;
                        s += e;
                    }
                    for k in 0..*len {
                        buf[out + k] /= s;
                    }
                }
                Op::Onehot { out, value } => {
                    let len = self.site_len(*out);
                    buf[*out..out + len].fill(0.0);
                    buf[out + value] = 1.0;
                }
                Op::Factor { factor, inputs, out, leak } => {
                    self.factor_forward(*factor, inputs, *out, *leak, buf);
                }
                Op::GateExit { cond, branches, out, len } => {
                    for k in 0..*len {
                        let mut s = 0.0;
                        for &(v, child) in branches {
                            s += buf[child + k] * buf[cond + v];
                        }
                        buf[out + k] = s;
                    }
                }
            }
            let (out, len) = self.op_out(op);
            if buf[out..out + len].iter().any(|x| !x.is_finite()) {
                let site = self.sites.iter().find(|s| s.offset == out).unwrap();
                return Err(NumericError { site: format!("{} in gate {}", self.names[site.var], site.gate) });
            }
        }
        Ok(())
    }

    fn site_len(&self, offset: usize) -> usize {
        let i = self.sites.partition_point(|s| s.offset < offset);
        self.sites[i].len
    }

    fn op_out(&self, op: &Op) -> (usize, usize) {
        match op {
            Op::Softmax { out, len, .. } | Op::GateExit { out, len, .. } => (*out, *len),
            Op::Onehot { out, .. } => (*out, self.site_len(*out)),
            Op::Factor { factor, out, .. } => (*out, self.out_domains[*factor]),
        }
    }

    fn factor_forward(&self, factor: FactorId, inputs: &[usize], out: usize, leak: bool, buf: &mut [f64]) {
        let table = &self.tables[factor];
        let doms = &self.in_domains[factor];
        let n_out = self.out_domains[factor];
        let mut acc = vec![0.0; n_out];
        let mut z = 0.0;
        let mut idx = vec![0usize; doms.len()];
        for &y in table.iter() {
            let mut w = 1.0;
            for (i, &off) in inputs.iter().enumerate() {
                w *= buf[off + idx[i]];
            }
            if y >= 0 {
                acc[y as usize] += w;
                z += w;
            }
            advance(&mut idx, doms);
        }
        if leak {
            if z > 0.0 {
                for a in acc.iter_mut() {
                    *a /= z;
                }
            } else {
                acc.fill(0.0);
            }
        }
        buf[out..out + n_out].copy_from_slice(&acc);
    }

    /// Data loss `-sum log max(mu_o(x*), eps)`.
    pub fn loss(&self, buf: &[f64], eps: f64) -> f64 {
        self.observations.iter().map(|&(off, x)| -buf[off + x].max(eps).ln()).sum()
    }

    /// Forward and reverse pass. Returns the objective
    /// `loss - rho * sum_p H(mu_p)`, the data loss alone, and the gradient
    /// with respect to the logits.
    pub fn gradient(
        &self,
        logits: &Logits,
        eps: f64,
        rho: f64,
        buf: &mut Vec<f64>,
        adj: &mut Vec<f64>,
        grad: &mut Logits,
    ) -> Result<(f64, f64), NumericError> {
        buf.resize(self.size, 0.0);
        adj.clear();
        adj.resize(self.size, 0.0);
        self.forward_into(logits, buf)?;
        let loss = self.loss(buf, eps);
        for &(off, x) in &self.observations {
            let mu = buf[off + x];
            if mu > eps {
                adj[off + x] -= 1.0 / mu;
            }
        }
        let mut objective = loss;
        if rho != 0.0 {
            for (&off, &len) in self.param_sites.iter().zip(&self.param_lens) {
                let mut h = 0.0;
                for k in 0..len {
                    let mu = buf[off + k];
                    let l = mu.max(eps).ln();
                    h -= mu * l;
                    // d(-rho * H)/d mu = rho * (log max(mu, eps) + [mu > eps])
                    adj[off + k] += rho * (l + if mu > eps { 1.0 } else { 0.0 });
                }
                objective -= rho * h;
            }
        }
        for op in self.ops.iter().rev() {
            match op {
                Op::Softmax { param, out, len } => {
                    let g = &mut grad.m[*param];
                    let dot: f64 = (0..*len).map(|k| adj[out + k] * buf[out + k]).sum();
                    for k in 0..*len {
                        g[k] = buf[out + k] * (adj[out + k] - dot);
                    }
                }
                Op::Onehot { .. } => {}
                Op::Factor { factor, inputs, out, leak } => {
                    self.factor_backward(*factor, inputs, *out, *leak, buf, adj);
                }
                Op::GateExit { cond, branches, out, len } => {
                    for &(v, child) in branches {
                        let mut dc = 0.0;
                        for k in 0..*len {
                            let g = adj[out + k];
                            adj[child + k] += g * buf[cond + v];
                            dc += g * buf[child + k];
                        }
                        adj[cond + v] += dc;
                    }
                }
            }
        }
        Ok((objective, loss))
    }

    fn factor_backward(
        &self,
        factor: FactorId,
        inputs: &[usize],
        out: usize,
        leak: bool,
        buf: &[f64],
        adj: &mut [f64],
    ) {
        let table = &self.tables[factor];
        let doms = &self.in_domains[factor];
        let n_out = self.out_domains[factor];
        let m = inputs.len();
        if m == 0 {
            return;
        }
        let g_out: Vec<f64> = adj[out..out + n_out].to_vec();
        if g_out.iter().all(|&g| g == 0.0) {
            return;
        }
        // Per-configuration adjoint G_k of the weight w(x_k).
        let (scale, shift) = if leak {
            let mut z = 0.0;
            let mut idx = vec![0usize; m];
            for &y in table.iter() {
                if y >= 0 {
                    let mut w = 1.0;
                    for (i, &off) in inputs.iter().enumerate() {
                        w *= buf[off + idx[i]];
                    }
                    z += w;
                }
                advance(&mut idx, doms);
            }
            if z <= 0.0 {
                return;
            }
            // mu = U / Z, so dL/dU = g / Z and dL/dZ = -sum_y g(y) mu(y) / Z.
            let dz: f64 = -(0..n_out).map(|y| g_out[y] * buf[out + y]).sum::<f64>() / z;
            (1.0 / z, dz)
        } else {
            (1.0, 0.0)
        };
        let mut idx = vec![0usize; m];
        let mut prefix = vec![1.0; m + 1];
        for &y in table.iter() {
            if y >= 0 {
                let gk = g_out[y as usize] * scale + shift;
                if gk != 0.0 {
                    for i in 0..m {
                        prefix[i + 1] = prefix[i] * buf[inputs[i] + idx[i]];
                    }
                    let mut suffix = 1.0;
                    for i in (0..m).rev() {
                        adj[inputs[i] + idx[i]] += gk * prefix[i] * suffix;
                        suffix *= buf[inputs[i] + idx[i]];
                    }
                }
            }
            advance(&mut idx, doms);
        }
    }
}

fn advance(idx: &mut [usize], doms: &[usize]) {
    for i in (0..idx.len()).rev() {
        idx[i] += 1;
        if idx[i] < doms[i] {
            return;
        }
        idx[i] = 0;
    }
}

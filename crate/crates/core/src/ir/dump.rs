use std::fmt::Write;

use super::graph::{FactorKind, GatedFactorGraph, GateId, Item, TableEntry};

fn cond_text(g: &GatedFactorGraph, (v, x): (usize, u32)) -> String {
    format!("{}={}", g.variables[v].name, x)
}

/// Deterministic text rendering of a graph.
pub fn dump_graph(g: &GatedFactorGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "variables {}", g.variables.len());
    for (i, v) in g.variables.iter().enumerate() {
        let _ = writeln!(out, "  v{i} {} : {}({})", v.name, v.kind.keyword(), v.domain);
    }
    let free: Vec<String> = g.free_params.iter().map(|&p| g.variables[p].name.clone()).collect();
    let _ = writeln!(out, "free params [{}]", free.join(", "));
    let _ = writeln!(out, "inputs");
    for &(v, x) in &g.inputs {
        let _ = writeln!(out, "  {} = {x}", g.variables[v].name);
    }
    let _ = writeln!(out, "observations");
    for &(v, x) in &g.observations {
        let _ = writeln!(out, "  {} == {x}", g.variables[v].name);
    }
    let _ = writeln!(out, "gates {}", g.gates.len());
    dump_gate(g, 0, 1, &mut out);
    let _ = writeln!(out, "ghost sites {}", g.ghost_sites.len());
    for s in &g.ghost_sites {
        let f = &g.families[s.family];
        let _ = writeln!(out, "  {} @ F{} ({})", g.variables[s.var].name, f.id, g.variables[f.cond].name);
    }
    out
}

fn dump_gate(g: &GatedFactorGraph, id: GateId, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    let gate = &g.gates[id];
    let path: Vec<String> = gate.path_condition.iter().map(|&c| cond_text(g, c)).collect();
    let active: Vec<&str> = g.active[id].iter().map(|&v| g.variables[v].name.as_str()).collect();
    let _ = writeln!(out, "{pad}g{id} ({}) active [{}]", path.join(", "), active.join(", "));
    for item in &gate.items {
        match *item {
            Item::Factor(fid) => {
                let f = &g.factors[fid];
                let ins: Vec<&str> = f.inputs.iter().map(|&v| g.variables[v].name.as_str()).collect();
                let kind = match f.kind {
                    FactorKind::Copy => "copy",
                    FactorKind::Constant => "const",
                    FactorKind::Function => "fn",
                };
                let table: Vec<String> = f
                    .table
                    .entries
                    .iter()
                    .map(|e| match e {
                        TableEntry::Value(x) => x.to_string(),
                        TableEntry::OutOfRange(_) => "!".to_string(),
                    })
                    .collect();
                let _ = writeln!(
                    out,
                    "{pad}  f{fid} {} <- {kind}({}) [{}]",
                    g.variables[f.output].name,
                    ins.join(", "),
                    table.join(" ")
                );
            }
            Item::Family(fam) => {
                let f = &g.families[fam];
                let ex: Vec<&str> = f.exports.iter().map(|&v| g.variables[v].name.as_str()).collect();
                let _ = writeln!(
                    out,
                    "{pad}  F{fam} on {} exports [{}]",
                    g.variables[f.cond].name,
                    ex.join(", ")
                );
                for &(_, child) in &f.branches {
                    dump_gate(g, child, depth + 2, out);
                }
            }
        }
    }
}

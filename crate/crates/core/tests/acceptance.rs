//! Acceptance checks. Prints one line per criterion and exits nonzero if any
//! criterion fails. Skipped criteria (no external solver) do not fail.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use tpt_core::bench::{builtin_task, builtin_tasks, island_configs};
use tpt_core::fmgd::*;
use tpt_core::interp::{enumerate_all, enumerate_solve, execute, search_space_size, EnumResult};
use tpt_core::ir::{compile_graph, difficulty_metrics, GatedFactorGraph, ParamAssignment, ROOT};
use tpt_core::lp::{build_lp, solve_lp, write_lp, LpModel, LpOptions, LpStatus, Row, RowClass};
use tpt_core::sketch::emit_sketch;
use tpt_core::smt::{emit_smtlib, solve_smt, SmtStatus};

const MASTER_SEED: u64 = 2016;
const SEEDS: usize = 100;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn graph(name: &str) -> GatedFactorGraph {
    builtin_task(name).unwrap().graph().unwrap()
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn vanilla_rate(g: &GatedFactorGraph) -> f64 {
    random_search(g, &HyperDistribution::point(&FmgdHyperparams::vanilla()), 1, SEEDS, MASTER_SEED).best_fraction
}

fn random_logits(g: &GatedFactorGraph, rng: &mut ChaCha8Rng) -> Logits {
    let mut l = Logits::zeros(g);
    for m in l.m.iter_mut().flatten() {
        *m = rng.gen_range(-3.0..3.0);
    }
    l
}

fn fd_max_rel_error(g: &GatedFactorGraph, l: &Logits) -> f64 {
    let h = 1e-5;
    let (_, grad) = gradient(g, l).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..l.m.len() {
        for k in 0..l.m[i].len() {
            let mut plus = l.clone();
            plus.m[i][k] += h;
            let mut minus = l.clone();
            minus.m[i][k] -= h;
            let fd = (forward(g, &plus).unwrap().loss - forward(g, &minus).unwrap().loss) / (2.0 * h);
            let a = grad.m[i][k];
            worst = worst.max((a - fd).abs() / a.abs().max(fd.abs()).max(1e-3));
        }
    }
    worst
}

fn gradients() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for name in ["parity_k4", "parity_k8", "fig7"] {
        let g = graph(name);
        for _ in 0..20 {
            worst = worst.max(fd_max_rel_error(&g, &random_logits(&g, &mut rng)));
        }
    }
    check(worst < 1e-5, format!("max relative error {worst:.2e} (< 1e-5)"))
}

fn islands() -> Verdict {
    let (mut n, mut max_grad, mut min_loss) = (0, 0.0f64, f64::INFINITY);
    for k in 4..=8 {
        let g = graph(&format!("parity_k{k}"));
        for c in island_configs(k) {
            let mut l = Logits::zeros(&g);
            for (i, &x) in c[1..].iter().enumerate() {
                l.m[i] = match x {
                    0.0 => vec![40.0, -40.0],
                    1.0 => vec![-40.0, 40.0],
                    _ => vec![0.0, 0.0],
                };
            }
            let (loss, grad) = gradient(&g, &l).unwrap();
            max_grad = max_grad.max(grad.max_abs());
            min_loss = min_loss.min(loss);
            n += 1;
        }
    }
    check(
        n > 0 && max_grad < 1e-6 && min_loss > 1e-3,
        format!("{n} islands, max |grad| {max_grad:.2e} (< 1e-6), min loss {min_loss:.3e} (> 1e-3)"),
    )
}

fn parity_trend() -> Verdict {
    let r: Vec<f64> = [4, 8, 32].iter().map(|k| vanilla_rate(&graph(&format!("parity_k{k}")))).collect();
    check(
        r[0] >= 0.80 && (0.25..=0.80).contains(&r[1]) && r[2] <= 0.10,
        format!("K=4 {:.2} (>= 0.80), K=8 {:.2} (in [0.25, 0.80]), K=32 {:.2} (<= 0.10)", r[0], r[1], r[2]),
    )
}

fn search_ordering() -> Verdict {
    let g = graph("parity_k8");
    let s = random_search(&g, &HyperDistribution::default(), 20, SEEDS, MASTER_SEED);
    let vanilla = vanilla_rate(&g);
    check(
        s.best_fraction >= s.aggregate_fraction && s.best_fraction >= vanilla,
        format!("best {:.2} >= average {:.4}, best >= vanilla {:.2}", s.best_fraction, s.aggregate_fraction, vanilla),
    )
}

fn smt_end_to_end() -> Verdict {
    let Some(cmd) = common::smt_solver() else { return Verdict::Skip("no SMT solver configured".into()) };
    let mut parts = Vec::new();
    for name in ["turing_invert", "turing_prepend_zero", "circuit_controlled_shift", "circuit_full_adder"] {
        let c = builtin_task(name).unwrap().compile().unwrap();
        let g = compile_graph(&c).unwrap();
        let t = Instant::now();
        let out = match solve_smt(&c, &g, &emit_smtlib(&c).unwrap(), &cmd, Some(Duration::from_secs(600))) {
            Ok(o) => o,
            Err(e) => return Verdict::Fail(format!("{name}: {e}")),
        };
        if out.status != SmtStatus::Sat || out.assignment.is_none() {
            return Verdict::Fail(format!("{name}: {:?}, timed out {}", out.status, out.timed_out));
        }
        parts.push(format!("{name} sat in {:.1}s", t.elapsed().as_secs_f64()));
    }
    Verdict::Pass(format!("{} (600 s each, verified)", parts.join(", ")))
}

fn oracle_equivalence() -> Verdict {
    let smt = common::smt_solver();
    let lp = common::lp_solver();
    let mut checked = Vec::new();
    for task in builtin_tasks() {
        let c = task.compile().unwrap();
        let g = compile_graph(&c).unwrap();
        if !search_space_size(&g).is_some_and(|n| n <= 1 << 16) {
            continue;
        }
        let found = match enumerate_solve(&g, 1 << 16) {
            EnumResult::Found(_) => true,
            EnumResult::NoSolution => false,
            EnumResult::BudgetExhausted => return Verdict::Fail(format!("{}: enumeration budget", task.name)),
        };
        let model = build_lp(&g, LpOptions { milp: true, ..Default::default() });
        match solve_lp(&g, &model, lp.as_deref(), 1 << 16) {
            Ok(s) if (s.status == LpStatus::Optimal && s.assignment.is_some()) == found => {}
            Ok(s) => return Verdict::Fail(format!("{}: MILP {:?} vs enumeration {found}", task.name, s.status)),
            Err(e) => return Verdict::Fail(format!("{}: {e}", task.name)),
        }
        if let Some(cmd) = &smt {
            match solve_smt(&c, &g, &emit_smtlib(&c).unwrap(), cmd, Some(Duration::from_secs(600))) {
                Ok(o) if o.status == if found { SmtStatus::Sat } else { SmtStatus::Unsat } => {}
                Ok(o) => return Verdict::Fail(format!("{}: SMT {:?} vs enumeration {found}", task.name, o.status)),
                Err(e) => return Verdict::Fail(format!("{}: {e}", task.name)),
            }
        }
        checked.push(task.name.clone());
    }
    let lp_name = if lp.is_some() { "external MILP" } else { "MILP fallback" };
    let smt_name = if smt.is_some() { "SMT" } else { "SMT skipped (no solver)" };
    Verdict::Pass(format!("{} tasks, {lp_name}, {smt_name}: {}", checked.len(), checked.join(" ")))
}

fn dense(m: &LpModel, keep: impl Fn(&Row) -> bool) -> (DMatrix<f64>, DVector<f64>) {
    let rows: Vec<&Row> = m.rows.iter().filter(|r| keep(r)).collect();
    let mut a = DMatrix::zeros(rows.len(), m.columns.len());
    let mut b = DVector::zeros(rows.len());
    for (i, r) in rows.iter().enumerate() {
        for &(c, v) in &r.coeffs {
            a[(i, c)] += v as f64;
        }
        b[i] = r.rhs as f64;
    }
    (a, b)
}

/// Whether `a x = b` implies `x[col] = 1`.
fn forces_one(a: &DMatrix<f64>, b: &DVector<f64>, col: usize) -> bool {
    let mut e = DVector::zeros(a.ncols());
    e[col] = 1.0;
    let at = a.transpose();
    let y = at.clone().svd(true, true).solve(&e, 1e-10).unwrap();
    (&at * &y - &e).norm() < 1e-8 && (b.dot(&y) - 1.0).abs() < 1e-8
}

fn gate_lp() -> Verdict {
    let g = graph("fig7");
    let lp = common::lp_solver();
    let s = match solve_lp(&g, &build_lp(&g, LpOptions { milp: true, ..Default::default() }), lp.as_deref(), 1 << 16) {
        Ok(s) => s,
        Err(e) => return Verdict::Fail(format!("fig7: {e}")),
    };
    let Some(a) = s.assignment else { return Verdict::Fail("fig7 MILP returned no integral assignment".into()) };
    let x4 = execute(&g, &a, &[]).values[g.var_by_name("X4").unwrap()];
    if x4 != Some(5) {
        return Verdict::Fail(format!("fig7 X4 = {x4:?}"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let small = ["fig7", "parity_k4", "parity_k8", "nand_2w2g", "make_small", "fig5_automaton", "fig6_add"];
    for name in small {
        let g = graph(name);
        let sols = enumerate_all(&g, 1 << 20).unwrap();
        let m = build_lp(&g, LpOptions::default());
        for _ in 0..20 {
            let x = m.integral_point(&g, sols.choose(&mut rng).unwrap());
            if m.residuals(&x).iter().any(|&r| r != 0.0) {
                return Verdict::Fail(format!("{name}: a consistent assignment violates a row"));
            }
        }
    }

    let x0 = g.var_by_name("X0").unwrap();
    let not_obs = |r: &Row| r.class != RowClass::Pin;
    let mut witness = ParamAssignment::default();
    for (n, v) in [("X0", 1), ("X1", 0), ("X2", 3)] {
        witness.values.insert(g.var_by_name(n).unwrap(), v);
    }
    let without = build_lp(&g, LpOptions { ghosts: false, ..Default::default() });
    let (a, b) = dense(&without, not_obs);
    let forced = forces_one(&a, &b, without.unary(x0, ROOT).unwrap());
    let with = build_lp(&g, LpOptions::default());
    let (a, b) = dense(&with, not_obs);
    let r = &a * DVector::from_vec(with.integral_point(&g, &witness)) - &b;
    let admitted = !forces_one(&a, &b, with.unary(x0, ROOT).unwrap()) && r.amax() == 0.0;
    check(
        forced && admitted,
        format!(
            "fig7 X4=5 via {}, 20 substitutions x {} models exact, ghost-free forces mu_X0(0)=1: {forced}, ghosts admit X0=1: {admitted}",
            if lp.is_some() { "external MILP" } else { "fallback" },
            small.len()
        ),
    )
}

fn overcompleteness() -> Verdict {
    let small = vanilla_rate(&graph("nand_2w2g"));
    let large = vanilla_rate(&graph("nand_3w3g"));
    check(large >= small + 0.10, format!("3w3g {large:.2} >= 2w2g {small:.2} + 0.10"))
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(common::golden_path(name)).unwrap_or_default()
}

fn emitter_stability() -> Verdict {
    let mut smt = String::new();
    let mut lp = String::new();
    let mut sketch_bad = Vec::new();
    let tasks = builtin_tasks();
    for task in &tasks {
        let c = task.compile().unwrap();
        smt.push_str(&format!("{} {}\n", task.name, common::hex(&Sha256::digest(emit_smtlib(&c).unwrap()))));
        if emit_sketch(&c).text() != golden(&format!("sketch/{}.sk", task.name)) {
            sketch_bad.push(task.name.clone());
        }
        // Too large to build in memory here; see the README.
        if task.name != "assembly_merge" {
            let g = compile_graph(&c).unwrap();
            let mut h = Sha256::new();
            write_lp(&build_lp(&g, LpOptions { milp: true, ..Default::default() }), &mut h).unwrap();
            lp.push_str(&format!("{} {}\n", task.name, common::hex(&h.finalize())));
        }
    }
    let smt_ok = smt == golden("smt/digests.txt");
    let lp_ok = lp == golden("lp/digests.txt");
    check(
        smt_ok && lp_ok && sketch_bad.is_empty(),
        format!(
            "{} tasks: SMT-LIB {}, LP {} (assembly_merge excluded), Sketch {}",
            tasks.len(),
            if smt_ok { "match" } else { "DIFFER" },
            if lp_ok { "match" } else { "DIFFER" },
            if sketch_bad.is_empty() { "match".to_string() } else { format!("DIFFER {sketch_bad:?}") }
        ),
    )
}

fn difficulty() -> Verdict {
    let table: &[(&str, f64, bool)] = &[
        ("turing_invert", 4.0, true),
        ("turing_prepend_zero", 9.0, true),
        ("turing_binary_decrement", 9.0, true),
        ("circuit_controlled_shift", 10.0, true),
        ("circuit_full_adder", 13.0, true),
        ("circuit_two_bit_adder", 22.0, true),
        ("assembly_access", 13.0, true),
        ("assembly_decrement", 20.0, true),
        ("assembly_list_k", 29.0, true),
        ("bblock_access", 14.0, false),
        ("bblock_decrement", 19.0, false),
        ("bblock_list_k", 33.0, false),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for &(name, want, asserted) in table {
        let m = builtin_task(name).unwrap().meta;
        let d = difficulty_metrics(m.family.unwrap(), &m.sizes, m.t.unwrap()).unwrap().log10_d;
        let within = (d - want).abs() <= 0.5;
        if asserted {
            ok &= within;
        }
        let tag = if asserted { "" } else { " reported" };
        parts.push(format!("{name} {d:.2} vs {want}{tag}"));
    }
    check(ok, format!("|ours - reference| <= 0.5: {}", parts.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict, Option<u64>); 10] = [
        ("1 gradient correctness", gradients, Some(30)),
        ("2 island stationary points", islands, Some(60)),
        ("3 vanilla parity trend", parity_trend, Some(20 * 60)),
        ("4 search ordering", search_ordering, None),
        ("5 SMT end-to-end", smt_end_to_end, None),
        ("6 oracle equivalence", oracle_equivalence, None),
        ("7 gate LP correctness", gate_lp, None),
        ("8 overcompleteness trend", overcompleteness, Some(30 * 60)),
        ("9 emitter stability", emitter_stability, None),
        ("10 difficulty metrics", difficulty, None),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = false;
    for (name, f, limit) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.starts_with(&format!("{p} "))) {
            continue;
        }
        let t = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Verdict::Fail(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = t.elapsed().as_secs_f64();
        let v = match (v, limit) {
            (Verdict::Pass(d), Some(l)) if secs >= l as f64 => Verdict::Fail(format!("{d}; took {secs:.1}s (limit {l}s)")),
            (v, _) => v,
        };
        let limit = limit.map_or(String::new(), |l| format!(", limit {l}s"));
        match v {
            Verdict::Pass(d) => println!("PASS criterion {name}: {d} [{secs:.1}s{limit}]"),
            Verdict::Skip(d) => println!("SKIP criterion {name}: {d}"),
            Verdict::Fail(d) => {
                failed = true;
                println!("FAIL criterion {name}: {d} [{secs:.1}s{limit}]");
            }
        }
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

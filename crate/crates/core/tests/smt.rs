mod common;

use std::collections::BTreeMap;
use std::time::Duration;

use proptest::prelude::*;
use sha2::{Digest, Sha256};
use tpt_core::bench::{builtin_task, builtin_tasks};
use tpt_core::frontend::ast::{BinOp, CmpOp};
use tpt_core::frontend::{compile_source, CheckedAst};
use tpt_core::interp::{check_consistency, enumerate_solve, search_space_size, EnumResult};
use tpt_core::ir::{compile_graph, unroll, UExpr, UStmt};
use tpt_core::smt::*;

fn compile(src: &str) -> CheckedAst {
    compile_source(src, &BTreeMap::new(), None, None).unwrap()
}

fn cell(checked: &CheckedAst, name: &str) -> usize {
    (0..checked.n_cells).find(|&c| checked.cell_ident(c) == name).unwrap()
}

fn stmts(checked: &CheckedAst) -> Vec<UStmt> {
    unroll(checked).unwrap().stmts
}



#[test]
fn addition_translates_to_prefix_sum() {
    let c = compile("a = Var(3)\nb = Var(3)\n");
    let e = UExpr::Binary(BinOp::Add, Box::new(UExpr::Cell(cell(&c, "a"))), Box::new(UExpr::Cell(cell(&c, "b"))));
    let (t, guards) = translate_expr(&c, &e).unwrap();
    assert_eq!(t, "(+ a b)");
    assert!(guards.is_empty());
}

#[test]
fn parity_call_is_inlined() {
    let c = compile(
        "x = Var(2)\ny = Var(2)\n@CompileMe([2, 2], 2)\ndef Parity(a, b): return (a + b) % 2\n",
    );
    let e = UExpr::Call("Parity".into(), vec![UExpr::Cell(cell(&c, "x")), UExpr::Cell(cell(&c, "y"))]);
    let (t, guards) = translate_expr(&c, &e).unwrap();
    assert_eq!(t, "(mod (+ x y) 2)");
    assert!(guards.is_empty(), "{guards:?}");
}

#[test]
fn negation_of_equality() {
    let c = compile("a = Var(3)\nb = Var(3)\n");
    let eq = UExpr::Compare(CmpOp::Eq, Box::new(UExpr::Cell(cell(&c, "a"))), Box::new(UExpr::Cell(cell(&c, "b"))));
    let (t, _) = translate_bool(&c, &UExpr::Not(Box::new(eq))).unwrap();
    assert_eq!(t, "(not (= a b))");
}

#[test]
fn set_to_is_an_equality() {
    let c = compile("x = Var(2)\ny = Var(2)\nx.set_to(y)\n");
    let s = stmts(&c);
    assert_eq!(translate_stmt(&c, &s[0]).unwrap(), vec!["(= x y)".to_string()]);
}

#[test]
fn declarations_become_bound_pairs() {
    let c = compile("v = Param(3)\n");
    let text = emit_smtlib(&c).unwrap();
    assert!(text.contains("(declare-const v Int)\n"));
    assert!(text.contains("(assert (>= v 0))\n(assert (< v 3))\n"));
}

#[test]
fn branches_become_two_implications() {
    let c = compile("c = Param(2)\nx = Var(2)\nif c == 1:\n    x.set_to_constant(0)\nelse:\n    x.set_to_constant(1)\n");
    let out = translate_stmt(&c, &stmts(&c)[0]).unwrap();
    assert_eq!(out, vec!["(=> (= c 1) (and (= x 0)))".to_string(), "(=> (not (= c 1)) (and (= x 1)))".to_string()]);
}

#[test]
fn every_cell_has_exactly_two_bounds_and_is_referenced() {
    for name in ["fig5_automaton", "fig7", "parity_k8", "turing_invert", "circuit_full_adder", "bblock_access"] {
        let c = builtin_task(name).unwrap().compile().unwrap();
        let s = translate(&c).unwrap();
        assert_eq!(s.consts.len(), c.n_cells);
        let text = s.text();
        for (n, d) in &s.consts {
            assert_eq!(text.matches(&format!("(assert (>= {n} 0))\n")).count(), 1, "{name}: {n}");
            assert_eq!(text.matches(&format!("(assert (< {n} {d}))\n")).count(), 1, "{name}: {n}");
        }
        assert!(text.starts_with("(set-logic QF_LIA)\n"));
        assert!(text.ends_with("(check-sat)\n(get-model)\n"));
    }
}

#[test]
fn fig5_automaton_golden() {
    let c = builtin_task("fig5_automaton").unwrap().compile().unwrap();
    let text = emit_smtlib(&c).unwrap();
    assert!(text.contains("(declare-const ruleTable_0_0 Int)"));
    assert!(text.contains("(assert (>= ruleTable_0_0 0))\n(assert (< ruleTable_0_0 2))"));
    common::check_golden("smt/fig5_automaton.smt2", &text);
}

#[test]
fn corpus_digests_golden() {
    let mut lines = String::new();
    for task in builtin_tasks() {
        let c = task.compile().unwrap();
        let text = emit_smtlib(&c).unwrap();
        let digest = common::hex(&Sha256::digest(text.as_bytes()));
        lines.push_str(&format!("{} {}\n", task.name, digest));
    }
    common::check_golden("smt/digests.txt", &lines);
}

#[test]
fn empty_observations_leave_only_bounds() {
    let c = compile("p = Param(4)\nq = Var(4)\n");
    let s = translate(&c).unwrap();
    assert!(s.assertions.is_empty());
}

#[test]
fn parity_chain_has_one_equality_per_link() {
    let c = builtin_task("parity_k4").unwrap().compile().unwrap();
    let s = translate(&c).unwrap();
    let links: Vec<&String> = s.assertions.iter().filter(|a| a.contains("(mod (+ ")).collect();
    assert_eq!(links.len(), 4, "{:?}", s.assertions);
    assert!(s.assertions.contains(&"(= y_0 (mod (+ x_0 x_1) 2))".to_string()), "{:?}", s.assertions);
    assert!(s.assertions.contains(&"(= y_3 (mod (+ x_3 x_0) 2))".to_string()), "{:?}", s.assertions);
}

#[test]
fn function_branches_become_ite() {
    let c = compile(
        "x = Var(3)\ny = Var(3)\n@CompileMe([3], 3)\ndef F(a):\n    if a == 0:\n        return 2\n    return a - 1\ny.set_to(F(x))\n",
    );
    let out = translate_stmt(&c, &stmts(&c)[0]).unwrap();
    let ite = "(ite (= x 0) 2 (- x 1))";
    assert_eq!(out, vec![format!("(and (>= {ite} 0) (< {ite} 3))"), format!("(= y {ite})")]);
}

#[test]
fn parse_model_reads_negative_values_and_status() {
    let out = "sat\n(\n  (define-fun a () Int\n    3)\n  (define-fun b () Int\n    (- 2))\n)\n";
    let (status, values) = parse_model(out).unwrap();
    assert_eq!(status, SmtStatus::Sat);
    assert_eq!(values, vec![("a".to_string(), 3), ("b".to_string(), -2)]);
    let (status, values) = parse_model("unsat\n(error \"line 9 column 10: model is not available\")\n").unwrap();
    assert_eq!(status, SmtStatus::Unsat);
    assert!(values.is_empty());
    assert!(parse_model("sat\n((define-fun a () Int\n").is_err());
    assert!(parse_model("").is_err());
}

fn solve(name: &str, timeout: u64) -> Option<(SmtOutcome, EnumResult)> {
    let Some(cmd) = common::smt_solver() else {
        common::skip("SMT");
        return None;
    };
    let task = builtin_task(name).unwrap();
    let c = task.compile().unwrap();
    let g = compile_graph(&c).unwrap();
    let text = emit_smtlib(&c).unwrap();
    let out = solve_smt(&c, &g, &text, &cmd, Some(Duration::from_secs(timeout))).unwrap_or_else(|e| panic!("{name}: {e}"));
    let reference = match search_space_size(&g) {
        Some(n) if n <= 1 << 16 => enumerate_solve(&g, 1 << 16),
        _ => EnumResult::BudgetExhausted,
    };
    Some((out, reference))
}

#[test]
fn solver_agrees_with_enumeration_on_small_models() {
    for name in ["fig5_automaton", "fig6_add", "fig7", "make_small", "unsat_toy", "parity_k4", "parity_k8", "parity_unsat"] {
        let Some((out, reference)) = solve(name, 60) else { return };
        match reference {
            EnumResult::Found(_) => {
                assert_eq!(out.status, SmtStatus::Sat, "{name}");
                assert!(out.assignment.is_some(), "{name}");
            }
            EnumResult::NoSolution => assert_eq!(out.status, SmtStatus::Unsat, "{name}"),
            EnumResult::BudgetExhausted => panic!("{name}: search space too large for the reference"),
        }
    }
}

#[test]
fn benchmark_tasks_are_sat_and_verified() {
    for name in ["turing_invert", "turing_prepend_zero", "circuit_controlled_shift", "circuit_full_adder"] {
        let Some((out, _)) = solve(name, 300) else { return };
        assert_eq!(out.status, SmtStatus::Sat, "{name}");
        let g = builtin_task(name).unwrap().graph().unwrap();
        assert!(check_consistency(&g, out.assignment.as_ref().unwrap()), "{name}");
    }
}

#[test]
fn missing_solver_is_a_process_error() {
    let c = builtin_task("unsat_toy").unwrap().compile().unwrap();
    let g = compile_graph(&c).unwrap();
    let text = emit_smtlib(&c).unwrap();
    let err = solve_smt(&c, &g, &text, "/nonexistent/solver", None).unwrap_err();
    assert!(matches!(err, SmtError::Process { .. }), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn emission_is_deterministic(k in 4usize..12) {
        let mut hy = BTreeMap::new();
        hy.insert("const_K".to_string(), k as i64);
        let src = std::fs::read_to_string(common::repo_root().join("corpus/models/parity/parity_chain.tpt")).unwrap();
        let a = emit_smtlib(&compile_source(&src, &hy, None, None).unwrap()).unwrap();
        let b = emit_smtlib(&compile_source(&src, &hy, None, None).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }
}

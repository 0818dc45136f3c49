mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use tpt_core::bench::{builtin_task, builtin_tasks};
use tpt_core::interp::{check_consistency, enumerate_all, enumerate_solve, EnumResult};
use tpt_core::ir::{GatedFactorGraph, ParamAssignment, ROOT};
use tpt_core::lp::*;

fn graph(name: &str) -> GatedFactorGraph {
    builtin_task(name).unwrap().graph().unwrap()
}

fn row_text(m: &LpModel, r: &Row) -> String {
    let mut t: Vec<String> = r.coeffs.iter().map(|&(c, a)| format!("{a:+}*{}", m.columns[c].name)).collect();
    t.sort();
    format!("{} = {}", t.join(" "), r.rhs)
}

fn has_row(m: &LpModel, class: RowClass, coeffs: &[(&str, i32)], rhs: i32) -> bool {
    let mut want: Vec<String> = coeffs.iter().map(|(n, a)| format!("{a:+}*{n}")).collect();
    want.sort();
    let want = format!("{} = {}", want.join(" "), rhs);
    m.rows_of(class).any(|r| row_text(m, r) == want)
}

fn names(prefix: &str, n: usize, coeff: i32) -> Vec<(String, i32)> {
    (0..n).map(|x| (format!("{prefix}_{x}"), coeff)).collect()
}

#[test]
fn fig7_gate_normalization_and_ghost_rows() {
    let g = graph("fig7");
    let m = build_lp(&g, LpOptions::default());
    let mut norm = names("mu_X3_X0.0.g1", 10, 1);
    norm.push(("mu_X0_root_0".into(), -1));
    let norm: Vec<(&str, i32)> = norm.iter().map(|(n, a)| (n.as_str(), *a)).collect();
    assert!(has_row(&m, RowClass::Normalization, &norm, 0));

    let mut ghn = names("gh_X3_root_F0", 10, 1);
    ghn.push(("mu_X0_root_1".into(), -1));
    let ghn: Vec<(&str, i32)> = ghn.iter().map(|(n, a)| (n.as_str(), *a)).collect();
    assert!(has_row(&m, RowClass::GhostNormalization, &ghn, 0));

    for x in 0..10 {
        let (a, b, c) = (format!("mu_X3_root_{x}"), format!("gh_X3_root_F0_{x}"), format!("mu_X3_X0.0.g1_{x}"));
        assert!(has_row(&m, RowClass::ParentChild, &[(&a, 1), (&b, -1), (&c, -1)], 0));
    }
}

#[test]
fn parity_k4_has_no_ghosts_and_template_counts() {
    let g = graph("parity_k4");
    let m = build_lp(&g, LpOptions::default());
    assert_eq!(m.n_ghost_columns(), 0);
    let k = 4;
    // 2k binary cells, k factors with 4 consistent configurations.
    assert_eq!(m.columns.len(), 2 * k * 2 + k * 4);
    let normalization = 2 * k;
    let pins = 1 + k;
    let consistency = k * 3 * 2;
    assert_eq!(m.rows_of(RowClass::Normalization).count(), normalization);
    assert_eq!(m.rows_of(RowClass::Pin).count(), pins);
    assert_eq!(m.rows_of(RowClass::FactorConsistency).count(), consistency);
    assert_eq!(m.rows.len(), normalization + pins + consistency);
}

#[test]
fn empty_model_emits_header_and_bounds() {
    let src = "a = Var(2)\na.set_to_constant(1)\n";
    let checked = tpt_core::frontend::compile_source(src, &Default::default(), None, None).unwrap();
    let g = tpt_core::ir::compile_graph(&checked).unwrap();
    let text = emit_lp(&build_lp(&g, LpOptions { milp: true, ..Default::default() }));
    assert_eq!(
        text,
        "Maximize\n obj:\nSubject To\n norm_a_root: mu_a_root_0 + mu_a_root_1 = 1\n pin_in_a: mu_a_root_0 = 0\n\
         Bounds\n 0 <= mu_a_root_0 <= 1\n 0 <= mu_a_root_1 <= 1\nEnd\n"
    );
}

#[test]
fn milp_mode_only_adds_the_binary_section() {
    let g = graph("fig7");
    let lp = emit_lp(&build_lp(&g, LpOptions::default()));
    let milp = emit_lp(&build_lp(&g, LpOptions { milp: true, ..Default::default() }));
    let (head, tail) = milp.split_once("Binary\n").unwrap();
    assert_eq!(format!("{head}End\n"), lp);
    let binaries: Vec<&str> = tail.lines().take_while(|l| *l != "End").map(str::trim).collect();
    assert_eq!(binaries.len(), 2 + 2 + 10);
    assert!(binaries.iter().all(|b| b.contains("_root_")));
}

#[test]
fn every_column_is_constrained_and_names_are_unique() {
    for name in ["fig7", "parity_k8", "nand_3w3g", "turing_invert", "bblock_access", "assembly_access", "circuit_full_adder"] {
        let g = graph(name);
        for hard in [true, false] {
            let m = build_lp(&g, LpOptions { hard, ..Default::default() });
            let mut seen = vec![false; m.columns.len()];
            for r in &m.rows {
                for &(c, _) in &r.coeffs {
                    seen[c] = true;
                }
            }
            assert!(seen.iter().all(|&s| s), "{name}: unconstrained column");
            let mut names: Vec<&str> = m.columns.iter().map(|c| c.name.as_str()).collect();
            names.sort_unstable();
            let n = names.len();
            names.dedup();
            assert_eq!(n, names.len(), "{name}: duplicate column names");
            assert!(m.columns.iter().all(|c| c.name.len() < 255 && !c.name.contains(['[', ']', ' ', ':'])));
        }
    }
}

fn random_assignment(g: &GatedFactorGraph, rng: &mut ChaCha8Rng) -> ParamAssignment {
    let mut a = ParamAssignment::default();
    for &p in &g.free_params {
        a.values.insert(p, rng.gen_range(0..g.variables[p].domain as u32));
    }
    a
}

#[test]
fn consistent_assignments_satisfy_every_row_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for name in ["fig7", "parity_k4", "parity_k8", "nand_2w2g", "make_small", "fig5_automaton", "fig6_add"] {
        let g = graph(name);
        let sols = enumerate_all(&g, 1 << 20).unwrap();
        assert!(!sols.is_empty(), "{name}");
        for hard in [true, false] {
            let m = build_lp(&g, LpOptions { hard, ..Default::default() });
            for _ in 0..20 {
                let a = sols.choose(&mut rng).unwrap();
                let x = m.integral_point(&g, a);
                assert!(m.residuals(&x).iter().all(|&r| r == 0.0), "{name}");
                assert_eq!(m.extract_assignment(&g, &x, INTEGRALITY_TOL).as_ref(), Some(a));
            }
            // Inconsistent programs break at least one row.
            for _ in 0..200 {
                let a = random_assignment(&g, &mut rng);
                if check_consistency(&g, &a) {
                    continue;
                }
                let x = m.integral_point(&g, &a);
                assert!(m.residuals(&x).iter().any(|&r| r != 0.0), "{name}");
            }
        }
    }
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

/// Whether `a x = b` implies `x[col] = 1`: some combination of rows has
/// left-hand side e_col and right-hand side 1.
fn forces_one(a: &DMatrix<f64>, b: &DVector<f64>, col: usize) -> bool {
    let mut e = DVector::zeros(a.ncols());
    e[col] = 1.0;
    let at = a.transpose();
    let y = at.clone().svd(true, true).solve(&e, 1e-10).unwrap();
    (&at * &y - &e).norm() < 1e-8 && (b.dot(&y) - 1.0).abs() < 1e-8
}

#[test]
fn ghost_marginals_are_needed_for_fig7() {
    let g = graph("fig7");
    let x0 = g.var_by_name("X0").unwrap();
    let not_obs = |r: &Row| r.class != RowClass::Pin;
    // X0 = 1, X2 = 3 runs the doubling branch; X4 = 6 so drop the observation.
    let mut witness = ParamAssignment::default();
    for (n, v) in [("X0", 1), ("X1", 0), ("X2", 3)] {
        witness.values.insert(g.var_by_name(n).unwrap(), v);
    }

    let without = build_lp(&g, LpOptions { ghosts: false, ..Default::default() });
    assert_eq!(without.n_ghost_columns(), 0);
    let (a, b) = dense(&without, not_obs);
    assert!(forces_one(&a, &b, without.unary(x0, ROOT).unwrap()));
    let x = without.integral_point(&g, &witness);
    let r = &a * DVector::from_vec(x) - &b;
    assert!(r.amax() > 0.5);

    let with = build_lp(&g, LpOptions::default());
    let (a, b) = dense(&with, not_obs);
    assert!(!forces_one(&a, &b, with.unary(x0, ROOT).unwrap()));
    let x = with.integral_point(&g, &witness);
    assert_eq!(x[with.unary(x0, ROOT).unwrap()], 0.0);
    let r = &a * DVector::from_vec(x) - &b;
    assert_eq!(r.amax(), 0.0);
}

#[test]
fn parse_solution_reads_status_and_values() {
    let g = graph("parity_k4");
    let m = build_lp(&g, LpOptions::default());
    let text = format!("optimal\n{} 1\n{} 0.5\n", m.columns[0].name, m.columns[3].name);
    let (s, v) = parse_solution(&m, &text).unwrap();
    assert_eq!(s, LpStatus::Optimal);
    assert_eq!((v[0], v[3], v[1]), (1.0, 0.5, 0.0));
    assert!(parse_solution(&m, "optimal\nbogus 1\n").is_err());
    assert!(parse_solution(&m, "").is_err());
    assert_eq!(parse_solution(&m, "infeasible\n").unwrap().0, LpStatus::Infeasible);
}

#[test]
fn fallback_matches_enumeration() {
    let g = graph("fig7");
    let m = build_lp(&g, LpOptions { milp: true, ..Default::default() });
    let s = solve_lp(&g, &m, None, 1 << 20).unwrap();
    let EnumResult::Found(a) = enumerate_solve(&g, 1 << 20) else { panic!() };
    assert_eq!(s.assignment, Some(a));
    assert_eq!(s.verified, Some(true));
    assert_eq!(s.backend, LpBackend::Enumeration);
    let u = graph("unsat_toy");
    let s = solve_lp(&u, &build_lp(&u, LpOptions::default()), None, 1 << 20).unwrap();
    assert_eq!(s.status, LpStatus::Infeasible);
}

#[test]
fn failing_solver_reports_its_output() {
    let g = graph("parity_k4");
    let m = build_lp(&g, LpOptions::default());
    let err = solve_lp(&g, &m, Some("sh -c 'echo boom; exit 3' --"), 0).unwrap_err();
    let _ = err;
    let err = solve_lp(&g, &m, Some("false"), 0).unwrap_err();
    assert!(matches!(err, LpError::Solver { .. }), "{err}");
    let err = solve_lp(&g, &m, Some("/nonexistent/solver"), 0).unwrap_err();
    assert!(matches!(err, LpError::Solver { .. }), "{err}");
}

#[test]
fn external_lp_on_parity_is_integral_all_zero() {
    let Some(solver) = common::lp_solver() else { return common::skip("LP") };
    let g = graph("parity_k4");
    let s = solve_lp(&g, &build_lp(&g, LpOptions::default()), Some(&solver), 0).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    let a = s.assignment.expect("integral");
    assert!(a.values.values().all(|&x| x == 0));
    assert_eq!(s.verified, Some(true));
}

#[test]
fn external_milp_on_fig7_gives_x4_five() {
    let Some(solver) = common::lp_solver() else { return common::skip("LP") };
    let g = graph("fig7");
    let s = solve_lp(&g, &build_lp(&g, LpOptions { milp: true, ..Default::default() }), Some(&solver), 0).unwrap();
    let a = s.assignment.expect("integral");
    let trace = tpt_core::interp::execute(&g, &a, &[]);
    assert_eq!(trace.values[g.var_by_name("X4").unwrap()], Some(5));
    assert_eq!(s.verified, Some(true));
}

#[test]
fn external_milp_feasibility_agrees_with_enumeration() {
    let Some(solver) = common::lp_solver() else { return common::skip("LP") };
    for name in ["fig7", "parity_k4", "parity_k8", "parity_unsat", "unsat_toy", "make_small", "nand_2w2g"] {
        let g = graph(name);
        let s = solve_lp(&g, &build_lp(&g, LpOptions { milp: true, ..Default::default() }), Some(&solver), 0).unwrap();
        let found = matches!(enumerate_solve(&g, 1 << 20), EnumResult::Found(_));
        assert_eq!(s.status == LpStatus::Optimal, found, "{name}");
        if found {
            assert_eq!(s.verified, Some(true), "{name}");
        }
    }
}

#[test]
fn fig7_milp_golden() {
    let g = graph("fig7");
    let text = emit_lp(&build_lp(&g, LpOptions { milp: true, ..Default::default() }));
    common::check_golden("lp/fig7.lp", &text);
}

/// The merge task's model is too large to build here.
#[test]
fn corpus_digests_golden() {
    let mut lines = String::new();
    for task in builtin_tasks().into_iter().filter(|t| t.name != "assembly_merge") {
        let g = task.graph().unwrap();
        let mut h = Sha256::new();
        write_lp(&build_lp(&g, LpOptions { milp: true, ..Default::default() }), &mut h).unwrap();
        lines.push_str(&format!("{} {}\n", task.name, common::hex(&h.finalize())));
    }
    common::check_golden("lp/digests.txt", &lines);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn emission_is_deterministic(milp in any::<bool>(), hard in any::<bool>(), idx in 0usize..4) {
        let name = ["fig7", "parity_k5", "make_small", "nand_2w2g"][idx];
        let g = graph(name);
        let o = LpOptions { milp, hard, ghosts: true };
        prop_assert_eq!(emit_lp(&build_lp(&g, o)), emit_lp(&build_lp(&graph(name), o)));
    }
}

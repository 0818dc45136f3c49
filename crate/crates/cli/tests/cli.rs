use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use tpt_core::report::validate_report;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

fn tpt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tpt"))
        .args(args)
        .current_dir(root())
        .env_remove("TPT_SMT_SOLVER")
        .env_remove("TPT_LP_SOLVER")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn z3() -> bool {
    Command::new("z3").arg("-version").output().is_ok_and(|o| o.status.success())
}

#[test]
fn enumeration_solves_fig7_and_verifies() {
    let o = tpt(&["solve", "--backend", "enum", "corpus/tasks/fig7"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    validate_report(&v).unwrap();
    assert_eq!(v["status"], "solved");
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("report.json");
    std::fs::write(&f, &o.stdout).unwrap();
    let o = tpt(&["verify", "corpus/tasks/fig7", "--assignment", f.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8_lossy(&o.stdout), "consistent\n");
}

#[test]
fn verify_rejects_a_wrong_program() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("a.json");
    std::fs::write(&f, r#"{"X0": 1, "X1": 1, "X2": 1}"#).unwrap();
    let o = tpt(&["verify", "fig7", "--assignment", f.to_str().unwrap()]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8_lossy(&o.stdout), "inconsistent\n");
}

#[test]
fn unsat_model_exits_one() {
    let o = tpt(&["solve", "--backend", "enum", "unsat_toy"]);
    assert_eq!(code(&o), 1);
    let v = stdout_json(&o);
    validate_report(&v).unwrap();
    assert_eq!(v["status"], "no_solution");
    assert!(v.get("assignment").is_none());
    if !z3() {
        eprintln!("warning: skipping, no SMT solver configured");
        return;
    }
    let o = tpt(&["solve", "--backend", "smt", "corpus/tasks/unsat_toy", "--solver", "z3"]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_json(&o)["status"], "no_solution");
}

#[test]
fn smt_backend_solves_parity() {
    if !z3() {
        eprintln!("warning: skipping, no SMT solver configured");
        return;
    }
    let o = tpt(&["solve", "--backend", "smt", "parity_k8", "--solver", "z3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    validate_report(&v).unwrap();
    assert!(v["assignment"].as_object().unwrap().values().all(|x| x == 0));
}

#[test]
fn lp_backend_falls_back_to_enumeration() {
    let o = tpt(&["solve", "--backend", "lp", "fig7"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    validate_report(&v).unwrap();
    assert_eq!(v["metrics"]["lp_backend"], "enumeration");
}

#[test]
fn solver_failures_exit_three() {
    let o = tpt(&["solve", "--backend", "smt", "fig7", "--solver", "/nonexistent/solver"]);
    assert_eq!(code(&o), 3);
    let o = tpt(&["solve", "--backend", "smt", "fig7"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("TPT_SMT_SOLVER"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&tpt(&["solve", "--backend", "enum", "no_such_task"])), 2);
    assert_eq!(code(&tpt(&["solve", "--backend", "magic", "fig7"])), 2);
    assert_eq!(code(&tpt(&["emit", "fig7", "--format", "smt2", "--bogus"])), 2);
    assert_eq!(code(&tpt(&[])), 2);
}

#[test]
fn emission_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    for (fmt, ext) in [("smt2", "smt2"), ("lp", "lp"), ("sk", "sk")] {
        let a = dir.path().join(format!("a.{ext}"));
        let b = dir.path().join(format!("b.{ext}"));
        for p in [&a, &b] {
            let o = tpt(&["emit", "--format", fmt, "corpus/tasks/parity_k4", "-o", p.to_str().unwrap()]);
            assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        }
        let (x, y) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        assert!(!x.is_empty());
        assert_eq!(x, y, "{fmt}");
        assert_eq!(x.last(), Some(&b'\n'));
    }
}

#[test]
fn compile_reads_hypers_and_snippets() {
    let dir = tempfile::tempdir().unwrap();
    let h = dir.path().join("h.json");
    std::fs::write(&h, r#"{"const_K": 4}"#).unwrap();
    let o = tpt(&["compile", "corpus/models/parity/parity_chain.tpt", "--hypers", h.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = String::from_utf8_lossy(&o.stdout);
    assert!(s.contains("free_params 3\n"), "{s}");
    let task = root().join("corpus/tasks/fig5_automaton");
    let o = tpt(&[
        "compile",
        "corpus/models/toy/fig5_automaton.tpt",
        "--hypers",
        task.join("hypers.json").to_str().unwrap(),
        "--in",
        task.join("io/0.in.tpt").to_str().unwrap(),
        "--out",
        task.join("io/0.out.tpt").to_str().unwrap(),
        "--dump-ir",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!o.stdout.is_empty());
    assert_eq!(code(&tpt(&["compile", "corpus/models/parity/parity_chain.tpt"])), 2);
}

#[test]
fn restarts_are_independent_of_worker_count() {
    let strip = |o: &Output| {
        let mut v = stdout_json(o);
        v.as_object_mut().unwrap().remove("wall_ms");
        v
    };
    let args = ["solve", "--backend", "fmgd", "parity_k8", "--restarts", "4", "--seed", "3"];
    let one = tpt(&[&["--jobs", "1"], &args[..]].concat());
    let two = tpt(&[&["--jobs", "3"], &args[..]].concat());
    validate_report(&stdout_json(&one)).unwrap();
    assert_eq!(code(&one), code(&two));
    assert_eq!(strip(&one), strip(&two));
}

#[test]
fn search_prints_a_report() {
    let o = tpt(&["search", "parity_k4", "--settings", "2", "--seeds", "3", "--master-seed", "7"]);
    assert!(code(&o) <= 1, "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["settings"].as_array().unwrap().len(), 2);
    assert_eq!(v["settings"][0]["runs"], 3);
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("r.csv");
    let o = tpt(&["bench", "--suite", "parity", "--backends", "enum,smt", "--report", f.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&f).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "task,log10_d,backend,status,wall_ms");
    assert!(lines.iter().any(|l| l.starts_with("parity_k4,,enum,solved,")), "{csv}");
    assert!(lines.iter().any(|l| l.starts_with("parity_unsat,,enum,no_solution,")), "{csv}");
    assert!(lines.iter().any(|l| l.starts_with("parity_k4,,smt,skipped,")), "{csv}");
}

#![allow(dead_code)]

use std::path::PathBuf;
use std::process::Command;

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

/// `TPT_LP_SOLVER`, or the bundled HiGHS adapter when highspy is importable.
pub fn lp_solver() -> Option<String> {
    if let Ok(s) = std::env::var("TPT_LP_SOLVER") {
        return (!s.is_empty()).then_some(s);
    }
    let ok = Command::new("python3").args(["-c", "import highspy"]).output().is_ok_and(|o| o.status.success());
    ok.then(|| format!("python3 {}", repo_root().join("scripts/highs_lp.py").display()))
}

/// `TPT_SMT_SOLVER`, or `z3` when it is on the path.
pub fn smt_solver() -> Option<String> {
    if let Ok(s) = std::env::var("TPT_SMT_SOLVER") {
        return (!s.is_empty()).then_some(s);
    }
    let ok = Command::new("z3").arg("-version").output().is_ok_and(|o| o.status.success());
    ok.then(|| "z3".to_string())
}

pub fn skip(what: &str) {
    eprintln!("warning: skipping, no {what} solver configured");
}

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Compares against a checked-in file; `TPT_BLESS=1` rewrites it first.
pub fn check_golden(name: &str, text: &str) {
    let path = golden_path(name);
    if std::env::var_os("TPT_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, text).unwrap();
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(text, want, "{name} differs from its golden file");
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

use std::fmt::Write as _;
use std::io;

use super::LpModel;

const TERMS_PER_LINE: usize = 12;
const CHUNK: usize = 1 << 16;

fn terms(out: &mut String, model: &LpModel, coeffs: &[(usize, i32)]) {
    for (i, &(c, a)) in coeffs.iter().enumerate() {
        if i > 0 && i % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let name = &model.columns[c].name;
        match (i, a) {
            (0, 1) => write!(out, " {name}"),
            (0, -1) => write!(out, " -{name}"),
            (0, a) => write!(out, " {a} {name}"),
            (_, 1) => write!(out, " + {name}"),
            (_, -1) => write!(out, " - {name}"),
            (_, a) if a < 0 => write!(out, " - {} {name}", -a),
            (_, a) => write!(out, " + {a} {name}"),
        }
        .unwrap();
    }
}

/// Streams the CPLEX LP text of a model. Identical models give
/// byte-identical output.
pub fn write_lp(model: &LpModel, w: &mut impl io::Write) -> io::Result<()> {
    let mut out = String::from("Maximize\n obj:");
    let mut flush = |out: &mut String, force: bool| -> io::Result<()> {
        if force || out.len() >= CHUNK {
            w.write_all(out.as_bytes())?;
            out.clear();
        }
        Ok(())
    };
    terms(&mut out, model, &model.objective);
    out.push_str("\nSubject To\n");
    for r in &model.rows {
        write!(out, " {}:", r.name).unwrap();
        terms(&mut out, model, &r.coeffs);
        writeln!(out, " = {}", r.rhs).unwrap();
        flush(&mut out, false)?;
    }
    out.push_str("Bounds\n");
    for c in &model.columns {
        writeln!(out, " 0 <= {} <= 1", c.name).unwrap();
        flush(&mut out, false)?;
    }
    if !model.binary.is_empty() {
        out.push_str("Binary\n");
        for &c in &model.binary {
            writeln!(out, " {}", model.columns[c].name).unwrap();
            flush(&mut out, false)?;
        }
    }
    out.push_str("End\n");
    flush(&mut out, true)
}

/// CPLEX LP text as a string.
pub fn emit_lp(model: &LpModel) -> String {
    let mut buf = Vec::new();
    write_lp(model, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("LP text is ASCII")
}

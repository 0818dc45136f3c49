use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::reference as r;
use crate::frontend::{compile_source, CheckedAst, FrontendError};
use crate::ir::{compile_graph, FamilySizes, GatedFactorGraph, IrError, ModelFamily};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("task `{0}` has fixed examples and cannot generate more")]
    NotGenerated(String),
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("{0}: {1}")]
    Json(PathBuf, serde_json::Error),
    #[error("{0}")]
    Frontend(#[from] FrontendError),
    #[error("{0}")]
    Ir(#[from] IrError),
    #[error("{0}")]
    Invalid(String),
}

/// Contents of `task.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskMeta {
    /// Model path relative to the corpus root.
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<ModelFamily>,
    #[serde(default)]
    pub sizes: FamilySizes,
    /// Execution length as reported for the task (not always the model's
    /// timestep count).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<u64>,
    pub n_instances: usize,
    #[serde(default)]
    pub shipped_only: bool,
}

/// A model plus hyperparameters and per-instance observation snippets.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub name: String,
    pub meta: TaskMeta,
    pub model_source: String,
    pub hypers: BTreeMap<String, i64>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

impl TaskSpec {
    pub fn input_snippet(&self) -> String {
        self.inputs.concat()
    }

    pub fn output_snippet(&self) -> String {
        self.outputs.concat()
    }

    pub fn compile(&self) -> Result<CheckedAst, FrontendError> {
        compile_source(&self.model_source, &self.hypers, Some(&self.input_snippet()), Some(&self.output_snippet()))
    }

    pub fn graph(&self) -> Result<GatedFactorGraph, BenchError> {
        let checked = self.compile()?;
        Ok(compile_graph(&checked)?)
    }

    /// Writes `tasks/<name>/{task.json, hypers.json, io/*}` under `root`.
    pub fn write(&self, root: &Path) -> Result<(), BenchError> {
        let dir = root.join("tasks").join(&self.name);
        let io = dir.join("io");
        fs::create_dir_all(&io).map_err(|e| BenchError::Io(io.clone(), e))?;
        let put = |p: PathBuf, s: String| fs::write(&p, s).map_err(|e| BenchError::Io(p, e));
        put(dir.join("task.json"), serde_json::to_string_pretty(&self.meta).unwrap() + "\n")?;
        put(dir.join("hypers.json"), serde_json::to_string_pretty(&self.hypers).unwrap() + "\n")?;
        for (i, (a, b)) in self.inputs.iter().zip(&self.outputs).enumerate() {
            put(io.join(format!("{i}.in.tpt")), a.clone())?;
            put(io.join(format!("{i}.out.tpt")), b.clone())?;
        }
        Ok(())
    }
}

fn read(p: &Path) -> Result<String, BenchError> {
    fs::read_to_string(p).map_err(|e| BenchError::Io(p.to_path_buf(), e))
}

/// Loads a task directory laid out as `<root>/tasks/<name>/`.
pub fn load_task(dir: &Path) -> Result<TaskSpec, BenchError> {
    let name = dir
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| BenchError::Invalid(format!("bad task path {}", dir.display())))?
        .to_string();
    let meta_path = dir.join("task.json");
    let meta: TaskMeta =
        serde_json::from_str(&read(&meta_path)?).map_err(|e| BenchError::Json(meta_path.clone(), e))?;
    let hyper_path = dir.join("hypers.json");
    let hypers: BTreeMap<String, i64> =
        serde_json::from_str(&read(&hyper_path)?).map_err(|e| BenchError::Json(hyper_path.clone(), e))?;
    let root = dir.parent().and_then(Path::parent).unwrap_or(Path::new("."));
    let model_source = read(&root.join(&meta.model))?;
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    let mut i = 0;
    loop {
        let a = dir.join("io").join(format!("{i}.in.tpt"));
        let b = dir.join("io").join(format!("{i}.out.tpt"));
        if !a.exists() && !b.exists() {
            break;
        }
        inputs.push(if a.exists() { read(&a)? } else { String::new() });
        outputs.push(if b.exists() { read(&b)? } else { String::new() });
        i += 1;
    }
    Ok(TaskSpec { name, meta, model_source, hypers, inputs, outputs })
}

/// Resolves a task argument: a task directory, or the name of a built-in task.
pub fn resolve_task(arg: &str) -> Result<TaskSpec, BenchError> {
    let p = Path::new(arg);
    if p.join("task.json").is_file() {
        return load_task(p);
    }
    let name = p.file_name().and_then(|n| n.to_str()).unwrap_or(arg);
    builtin_task(name).ok_or_else(|| BenchError::UnknownTask(arg.to_string()))
}

pub const TURING_MODEL: &str = include_str!("../../../../corpus/models/turing/turing.tpt");
pub const CIRCUIT_MODEL: &str = include_str!("../../../../corpus/models/circuit/circuit.tpt");
pub const BASIC_BLOCK_MODEL: &str = include_str!("../../../../corpus/models/basic_block/basic_block.tpt");
pub const ASSEMBLY_MODEL: &str = include_str!("../../../../corpus/models/assembly/assembly.tpt");
pub const PARITY_MODEL: &str = include_str!("../../../../corpus/models/parity/parity_chain.tpt");
pub const PARITY_UNSAT_MODEL: &str = include_str!("../../../../corpus/models/parity/parity_unsat.tpt");
pub const FIG5_MODEL: &str = include_str!("../../../../corpus/models/toy/fig5_automaton.tpt");
pub const FIG6_MODEL: &str = include_str!("../../../../corpus/models/toy/fig6_add.tpt");
pub const FIG7_MODEL: &str = include_str!("../../../../corpus/models/toy/fig7_gates.tpt");
pub const MAKE_SMALL_MODEL: &str = include_str!("../../../../corpus/models/toy/make_small.tpt");
pub const UNSAT_TOY_MODEL: &str = include_str!("../../../../corpus/models/toy/unsat_toy.tpt");

#[derive(Clone, Copy)]
enum Kind {
    Fixed(&'static str, &'static str),
    None,
    Invert,
    Prepend,
    Decrement,
    Shift,
    FullAdder,
    TwoBitAdder,
    Nand,
    Access,
    HeapDecrement,
    ListK,
    Merge,
}

struct Builtin {
    name: &'static str,
    path: &'static str,
    source: &'static str,
    hypers: &'static [(&'static str, i64)],
    family: Option<ModelFamily>,
    sizes: FamilySizes,
    t: Option<u64>,
    n: usize,
    seed: u64,
    shipped_only: bool,
    kind: Kind,
}

fn sizes(h: u64, s: u64, rr: u64, t: u64, b: u64) -> FamilySizes {
    let f = |x: u64| if x == 0 { None } else { Some(x) };
    FamilySizes { h: f(h), s: f(s), r: f(rr), t: f(t), b: f(b) }
}

const NO_SIZES: FamilySizes = FamilySizes { h: None, s: None, r: None, t: None, b: None };

macro_rules! toy {
    ($name:expr, $path:expr, $src:expr, $hy:expr, $kind:expr) => {
        Builtin {
            name: $name,
            path: $path,
            source: $src,
            hypers: $hy,
            family: None,
            sizes: NO_SIZES,
            t: None,
            n: 1,
            seed: 0,
            shipped_only: false,
            kind: $kind,
        }
    };
}

const TURING: &str = "models/turing/turing.tpt";
const CIRCUIT: &str = "models/circuit/circuit.tpt";
const BBLOCK: &str = "models/basic_block/basic_block.tpt";
const ASM: &str = "models/assembly/assembly.tpt";
const PARITY: &str = "models/parity/parity_chain.tpt";

fn catalog() -> Vec<Builtin> {
    use ModelFamily::*;
    let mut v = vec![
        toy!("fig5_automaton", "models/toy/fig5_automaton.tpt", FIG5_MODEL, &[], Kind::Fixed(
            "tape[0].set_to_constant(1)\ntape[1].set_to_constant(0)\n",
            "tape[4].observe_value(1)\n"
        )),
        toy!("fig6_add", "models/toy/fig6_add.tpt", FIG6_MODEL, &[], Kind::Fixed(
            "tape[0].set_to_constant(1)\ntape[1].set_to_constant(0)\n",
            "tape[4].observe_value(1)\n"
        )),
        toy!("fig7", "models/toy/fig7_gates.tpt", FIG7_MODEL, &[], Kind::None),
        toy!("make_small", "models/toy/make_small.tpt", MAKE_SMALL_MODEL, &[], Kind::None),
        toy!("unsat_toy", "models/toy/unsat_toy.tpt", UNSAT_TOY_MODEL, &[], Kind::None),
        toy!("parity_unsat", "models/parity/parity_unsat.tpt", PARITY_UNSAT_MODEL, &[], Kind::None),
    ];
    for (name, k) in [
        ("parity_k4", 4),
        ("parity_k5", 5),
        ("parity_k6", 6),
        ("parity_k7", 7),
        ("parity_k8", 8),
        ("parity_k16", 16),
        ("parity_k32", 32),
    ] {
        let hypers: &'static [(&'static str, i64)] = match k {
            4 => &[("const_K", 4)],
            5 => &[("const_K", 5)],
            6 => &[("const_K", 6)],
            7 => &[("const_K", 7)],
            8 => &[("const_K", 8)],
            16 => &[("const_K", 16)],
            _ => &[("const_K", 32)],
        };
        v.push(toy!(name, PARITY, PARITY_MODEL, hypers, Kind::None));
    }
    let turing = |name, h: i64, t: i64, seed, kind| Builtin {
        name,
        path: TURING,
        source: TURING_MODEL,
        hypers: match (h, t) {
            (1, 6) => &[
                ("const_nStateMem", 3),
                ("const_nStateHead", 2),
                ("const_nTimesteps", 6),
                ("const_tapeLength", 5),
                ("const_nInstances", 5),
            ],
            (2, 6) => &[
                ("const_nStateMem", 3),
                ("const_nStateHead", 3),
                ("const_nTimesteps", 6),
                ("const_tapeLength", 5),
                ("const_nInstances", 5),
            ],
            _ => &[
                ("const_nStateMem", 3),
                ("const_nStateHead", 3),
                ("const_nTimesteps", 9),
                ("const_tapeLength", 5),
                ("const_nInstances", 5),
            ],
        },
        family: Some(Turing),
        sizes: sizes(h as u64, 3, 0, 0, 0),
        t: Some(t as u64),
        n: 5,
        seed,
        shipped_only: false,
        kind,
    };
    v.push(turing("turing_invert", 1, 6, 101, Kind::Invert));
    v.push(turing("turing_prepend_zero", 2, 6, 102, Kind::Prepend));
    v.push(turing("turing_binary_decrement", 2, 9, 103, Kind::Decrement));
    let circuit = |name, rr: u64, t: u64, n: usize, seed, kind, hypers| Builtin {
        name,
        path: CIRCUIT,
        source: CIRCUIT_MODEL,
        hypers,
        family: Some(Circuit),
        sizes: sizes(5, 0, rr, t, 0),
        t: Some(t),
        n,
        seed,
        shipped_only: false,
        kind,
    };
    v.push(circuit(
        "circuit_controlled_shift",
        4,
        4,
        8,
        201,
        Kind::Shift,
        &[("const_nGates", 4), ("const_nWires", 4), ("const_nInstances", 8)],
    ));
    v.push(circuit(
        "circuit_full_adder",
        4,
        5,
        8,
        202,
        Kind::FullAdder,
        &[("const_nGates", 5), ("const_nWires", 4), ("const_nInstances", 8)],
    ));
    v.push(circuit(
        "circuit_two_bit_adder",
        5,
        8,
        16,
        203,
        Kind::TwoBitAdder,
        &[("const_nGates", 8), ("const_nWires", 5), ("const_nInstances", 16)],
    ));
    v.push(circuit(
        "nand_2w2g",
        2,
        2,
        4,
        204,
        Kind::Nand,
        &[("const_nGates", 2), ("const_nWires", 2), ("const_nInstances", 4)],
    ));
    v.push(circuit(
        "nand_3w3g",
        3,
        3,
        4,
        205,
        Kind::Nand,
        &[("const_nGates", 3), ("const_nWires", 3), ("const_nInstances", 4)],
    ));
    let heap = |name, family, path, source, _m: u64, rr: u64, b: u64, t: u64, seed, kind, hypers, shipped_only| {
        Builtin {
            name,
            path,
            source,
            hypers,
            family: Some(family),
            sizes: sizes(if family == BasicBlock { 9 } else { 10 }, 0, rr, 0, b),
            t: Some(t),
            n: 5,
            seed,
            shipped_only,
            kind,
        }
    };
    v.push(heap(
        "bblock_access",
        BasicBlock,
        BBLOCK,
        BASIC_BLOCK_MODEL,
        5,
        2,
        5,
        5,
        301,
        Kind::Access,
        &[
            ("const_nBlocks", 6),
            ("const_nRegisters", 2),
            ("const_nTimesteps", 5),
            ("const_maxInt", 5),
            ("const_nInstances", 5),
        ],
        false,
    ));
    v.push(heap(
        "bblock_decrement",
        BasicBlock,
        BBLOCK,
        BASIC_BLOCK_MODEL,
        5,
        2,
        5,
        18,
        302,
        Kind::HeapDecrement,
        &[
            ("const_nBlocks", 6),
            ("const_nRegisters", 2),
            ("const_nTimesteps", 18),
            ("const_maxInt", 5),
            ("const_nInstances", 5),
        ],
        false,
    ));
    v.push(heap(
        "bblock_list_k",
        BasicBlock,
        BBLOCK,
        BASIC_BLOCK_MODEL,
        8,
        2,
        8,
        11,
        303,
        Kind::ListK,
        &[
            ("const_nBlocks", 9),
            ("const_nRegisters", 2),
            ("const_nTimesteps", 11),
            ("const_maxInt", 8),
            ("const_nInstances", 5),
        ],
        false,
    ));
    v.push(heap(
        "assembly_access",
        Assembly,
        ASM,
        ASSEMBLY_MODEL,
        5,
        2,
        5,
        5,
        401,
        Kind::Access,
        &[
            ("const_nBlocks", 6),
            ("const_nRegisters", 2),
            ("const_nTimesteps", 6),
            ("const_maxInt", 5),
            ("const_nInstances", 5),
        ],
        false,
    ));
    v.push(heap(
        "assembly_decrement",
        Assembly,
        ASM,
        ASSEMBLY_MODEL,
        5,
        2,
        7,
        27,
        402,
        Kind::HeapDecrement,
        &[
            ("const_nBlocks", 8),
            ("const_nRegisters", 2),
            ("const_nTimesteps", 28),
            ("const_maxInt", 5),
            ("const_nInstances", 5),
        ],
        false,
    ));
    v.push(heap(
        "assembly_list_k",
        Assembly,
        ASM,
        ASSEMBLY_MODEL,
        8,
        2,
        10,
        16,
        403,
        Kind::ListK,
        &[
            ("const_nBlocks", 11),
            ("const_nRegisters", 2),
            ("const_nTimesteps", 17),
            ("const_maxInt", 8),
            ("const_nInstances", 5),
        ],
        false,
    ));
    v.push(heap(
        "assembly_merge",
        Assembly,
        ASM,
        ASSEMBLY_MODEL,
        17,
        6,
        22,
        69,
        404,
        Kind::Merge,
        &[
            ("const_nBlocks", 23),
            ("const_nRegisters", 6),
            ("const_nTimesteps", 70),
            ("const_maxInt", 17),
            ("const_nInstances", 5),
        ],
        true,
    ));
    v
}

impl Builtin {
    fn hyper(&self, k: &str) -> i64 {
        self.hypers.iter().find(|(n, _)| *n == k).map(|(_, v)| *v).expect("missing hyperparameter")
    }

    fn spec(&self) -> TaskSpec {
        let (inputs, outputs) = match self.kind {
            Kind::Fixed(a, b) => (vec![a.to_string()], vec![b.to_string()]),
            Kind::None => (Vec::new(), Vec::new()),
            _ => self.generate(self.n, self.seed).into_iter().unzip(),
        };
        TaskSpec {
            name: self.name.to_string(),
            meta: TaskMeta {
                model: self.path.to_string(),
                family: self.family,
                sizes: self.sizes,
                t: self.t,
                n_instances: self.n,
                shipped_only: self.shipped_only,
            },
            model_source: self.source.to_string(),
            hypers: self.hypers.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            inputs,
            outputs,
        }
    }

    fn generate(&self, n: usize, seed: u64) -> Vec<(String, String)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match self.kind {
            Kind::Invert | Kind::Prepend | Kind::Decrement => {
                let len = self.hyper("const_tapeLength") as usize;
                let steps = self.hyper("const_nTimesteps") as usize - 1;
                (0..n)
                    .map(|i| {
                        let (tape, out) = loop {
                            let k = rng.gen_range(0..len);
                            let mut tape: Vec<u8> = (0..k).map(|_| rng.gen_range(0..2)).collect();
                            tape.resize(len, r::BLANK);
                            match self.kind {
                                Kind::Invert if k < steps => break (tape.clone(), r::invert(&tape)),
                                Kind::Prepend if k < steps => break (tape.clone(), r::prepend_zero(&tape)),
                                Kind::Decrement if k > 0 => {
                                    tape[0] = 1;
                                    let zeros = tape[..k].iter().rev().take_while(|&&b| b == 0).count();
                                    // Scan right, turn at the blank, borrow back to the last 1.
                                    if k + 1 + zeros + 1 <= steps {
                                        break (tape.clone(), r::binary_decrement(&tape));
                                    }
                                }
                                _ => {}
                            }
                        };
                        let t_end = steps;
                        let mut a = String::new();
                        let mut b = String::new();
                        for (m, (&x, &y)) in tape.iter().zip(&out).enumerate() {
                            let _ = writeln!(a, "tape[{i},0,{m}].set_to_constant({x})");
                            let _ = writeln!(b, "tape[{i},{t_end},{m}].observe_value({y})");
                        }
                        (a, b)
                    })
                    .collect()
            }
            Kind::Shift | Kind::FullAdder | Kind::TwoBitAdder | Kind::Nand => {
                let bits = match self.kind {
                    Kind::Shift | Kind::FullAdder => 3,
                    Kind::TwoBitAdder => 4,
                    _ => 2,
                };
                let mut rows: Vec<u32> = (0..1u32 << bits).collect();
                if n < rows.len() {
                    rows.shuffle(&mut rng);
                    rows.truncate(n);
                }
                let wires = self.hyper("const_nWires") as usize;
                let gates = self.hyper("const_nGates");
                rows.iter()
                    .cycle()
                    .take(n)
                    .enumerate()
                    .map(|(i, &row)| {
                        let x: Vec<u8> = (0..bits).map(|k| ((row >> (bits - 1 - k)) & 1) as u8).collect();
                        let out: Vec<u8> = match self.kind {
                            Kind::Shift => r::controlled_shift([x[0], x[1], x[2]]).to_vec(),
                            Kind::FullAdder => {
                                let (s, c) = r::full_adder(x[0], x[1], x[2]);
                                vec![s, c]
                            }
                            Kind::TwoBitAdder => {
                                let (s1, s2, c) = r::two_bit_adder(x[0], x[1], x[2], x[3]);
                                vec![s1, s2, c]
                            }
                            _ => vec![r::nand(x[0], x[1])],
                        };
                        let mut a = String::new();
                        let mut b = String::new();
                        for w in 0..wires {
                            let _ = writeln!(a, "wires[{i},0,{w}].set_to_constant({})", x.get(w).copied().unwrap_or(0));
                        }
                        for (w, y) in out.iter().enumerate() {
                            let _ = writeln!(b, "wires[{i},{gates},{w}].observe_value({y})");
                        }
                        (a, b)
                    })
                    .collect()
            }
            Kind::Access | Kind::HeapDecrement | Kind::ListK | Kind::Merge => {
                let m = self.hyper("const_maxInt") as usize;
                let t_end = self.hyper("const_nTimesteps") - 1;
                (0..n)
                    .map(|i| {
                        let (heap, observed) = heap_example(self.kind, m, &mut rng);
                        let mut a = String::new();
                        let mut b = String::new();
                        for (k, x) in heap.iter().enumerate() {
                            let _ = writeln!(a, "heap[{i},0,{k}].set_to_constant({x})");
                        }
                        for (k, y) in observed {
                            let _ = writeln!(b, "heap[{i},{t_end},{k}].observe_value({y})");
                        }
                        (a, b)
                    })
                    .collect()
            }
            Kind::Fixed(..) | Kind::None => Vec::new(),
        }
    }
}

/// Samples an initial heap and the observed final cells.
fn heap_example(kind: Kind, m: usize, rng: &mut ChaCha8Rng) -> (Vec<u8>, Vec<(usize, u8)>) {
    let mut heap = vec![0u8; m];
    match kind {
        Kind::Access => {
            let j = rng.gen_range(1..=m - 2);
            heap[0] = rng.gen_range(0..j) as u8;
            for c in heap.iter_mut().skip(1).take(j) {
                *c = rng.gen_range(1..m) as u8;
            }
            let y = r::access(&heap);
            (heap, vec![(0, y)])
        }
        Kind::HeapDecrement => {
            let k = rng.gen_range(1..m);
            for c in heap.iter_mut().take(k) {
                *c = rng.gen_range(2..m) as u8;
            }
            let out = r::decrement(&heap);
            (heap, out.into_iter().enumerate().collect())
        }
        Kind::ListK => {
            let pairs = (m - 2) / 2;
            let mut slots: Vec<usize> = (0..pairs).map(|p| 2 + 2 * p).collect();
            slots.shuffle(rng);
            for (idx, &s) in slots.iter().enumerate() {
                heap[s] = slots.get(idx + 1).copied().unwrap_or(0) as u8;
                heap[s + 1] = rng.gen_range(1..m) as u8;
            }
            heap[0] = rng.gen_range(0..pairs) as u8;
            heap[1] = slots[0] as u8;
            let y = r::list_k(&heap);
            (heap, vec![(0, y)])
        }
        _ => {
            let budget = (m - 3) / 2 - 1;
            let total = rng.gen_range(2..=budget);
            let l1 = rng.gen_range(1..total);
            let l2 = total - l1;
            let mut sorted = |len: usize| {
                let mut v: Vec<u8> = (0..len).map(|_| rng.gen_range(1..m) as u8).collect();
                v.sort_unstable();
                v
            };
            let (a, b) = (sorted(l1), sorted(l2));
            let p1 = 3;
            let p2 = p1 + l1 + 1;
            let pout = p2 + l2 + 1;
            heap[0] = p1 as u8;
            heap[1] = p2 as u8;
            heap[2] = pout as u8;
            heap[p1..p1 + l1].copy_from_slice(&a);
            heap[p2..p2 + l2].copy_from_slice(&b);
            let out = r::merge(&heap);
            (heap, (pout..pout + total).map(|k| (k, out[k])).collect())
        }
    }
}

/// Every shipped task, with examples regenerated from pinned seeds.
pub fn builtin_tasks() -> Vec<TaskSpec> {
    catalog().iter().map(Builtin::spec).collect()
}

pub fn builtin_task(name: &str) -> Option<TaskSpec> {
    catalog().iter().find(|b| b.name == name).map(Builtin::spec)
}

/// Fresh examples for a generated task, as per-instance
/// `(input snippet, output snippet)` pairs with instance indices `0..n`.
/// The model's instance count must match `n` for the snippets to compile.
pub fn gen_examples(task: &str, n: usize, seed: u64) -> Result<Vec<(String, String)>, BenchError> {
    let cat = catalog();
    let b = cat.iter().find(|b| b.name == task).ok_or_else(|| BenchError::UnknownTask(task.to_string()))?;
    match b.kind {
        Kind::Fixed(..) | Kind::None => Err(BenchError::NotGenerated(task.to_string())),
        _ => Ok(b.generate(n, seed)),
    }
}

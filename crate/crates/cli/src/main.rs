use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use tpt_core::bench::{builtin_tasks, resolve_task, TaskSpec};
use tpt_core::fmgd::{random_search, FmgdHyperparams, HyperDistribution};
use tpt_core::frontend::compile_source;
use tpt_core::interp::{check_consistency, execute};
use tpt_core::ir::{compile_graph, difficulty_metrics, dump_graph, ParamAssignment};
use tpt_core::lp::{build_lp, write_lp, LpOptions};
use tpt_core::report::{solve_task, Backend, SolveError, SolveOptions, SolveReport};
use tpt_core::sketch::emit_sketch;
use tpt_core::smt::emit_smtlib;

#[derive(Parser)]
#[command(name = "tpt", version, about = "Compile and solve inductive program synthesis models")]
struct Cli {
    /// Worker threads for restarts and searches (default: available parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Fmgd,
    Lp,
    Smt,
    Enum,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Backend {
        match b {
            BackendArg::Fmgd => Backend::Fmgd,
            BackendArg::Lp => Backend::Lp,
            BackendArg::Smt => Backend::Smt,
            BackendArg::Enum => Backend::Enum,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Lp,
    Smt2,
    Sk,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Parity,
    Turing,
    Circuits,
    Bblock,
    Assembly,
}

#[derive(clap::Args)]
struct SolverArgs {
    /// Solver adapter command; defaults to TPT_SMT_SOLVER or TPT_LP_SOLVER.
    #[arg(long)]
    solver: Option<String>,
    /// Per-solve time limit in seconds (SMT only).
    #[arg(long)]
    timeout: Option<u64>,
    /// Solve the LP relaxation instead of the MILP.
    #[arg(long)]
    relaxation: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Independent FMGD initializations.
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    /// JSON file of FMGD hyperparameters.
    #[arg(long)]
    hyper_config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a model and print graph statistics.
    Compile {
        model: PathBuf,
        /// JSON object of hyperparameter values.
        #[arg(long)]
        hypers: Option<PathBuf>,
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long = "out")]
        output: Option<PathBuf>,
        #[arg(long)]
        dump_ir: bool,
    },
    /// Solve a task and print a JSON report.
    Solve {
        task: String,
        #[arg(long, value_enum)]
        backend: BackendArg,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Check an assignment against a task's examples.
    Verify {
        task: String,
        /// JSON file: a solve report or an object of parameter values.
        #[arg(long)]
        assignment: PathBuf,
    },
    /// Write a task in a solver input format.
    Emit {
        task: String,
        #[arg(long, value_enum)]
        format: Format,
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
        /// For LP output, omit the Binary section.
        #[arg(long)]
        relaxation: bool,
    },
    /// Solve every task of a suite with the selected backends.
    Bench {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [BackendArg::Smt, BackendArg::Lp, BackendArg::Fmgd])]
        backends: Vec<BackendArg>,
        /// Write results as CSV.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Random search over FMGD hyperparameters.
    Search {
        task: String,
        #[arg(long, default_value_t = 10)]
        settings: usize,
        #[arg(long, default_value_t = 10)]
        seeds: usize,
        #[arg(long, default_value_t = 0)]
        master_seed: u64,
        /// JSON hyperparameter distribution.
        #[arg(long)]
        distribution: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Backend(String),
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Task(_) | SolveError::Frontend(_) | SolveError::Ir(_) => Failure::Usage(e.to_string()),
            _ => Failure::Backend(e.to_string()),
        }
    }
}

fn usage(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

fn read(p: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn task(arg: &str) -> Result<TaskSpec, Failure> {
    resolve_task(arg).map_err(usage)
}

fn solve_options(s: &SolverArgs, backend: Backend) -> Result<SolveOptions, Failure> {
    let env = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
    let hyperparams = match &s.hyper_config {
        Some(p) => {
            let h: FmgdHyperparams = serde_json::from_str(&read(p)?).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            h.validate().map_err(usage)?;
            h
        }
        None => FmgdHyperparams::vanilla(),
    };
    let mut opts = SolveOptions {
        seed: s.seed,
        restarts: s.restarts,
        hyperparams,
        lp_solver: env("TPT_LP_SOLVER"),
        lp_options: LpOptions { milp: !s.relaxation, ..LpOptions::default() },
        smt_solver: env("TPT_SMT_SOLVER"),
        timeout: s.timeout.map(Duration::from_secs),
        ..SolveOptions::default()
    };
    if let Some(cmd) = &s.solver {
        match backend {
            Backend::Lp => opts.lp_solver = Some(cmd.clone()),
            _ => opts.smt_solver = Some(cmd.clone()),
        }
    }
    Ok(opts)
}

fn report_json(r: &SolveReport) -> String {
    serde_json::to_string_pretty(r).unwrap() + "\n"
}

fn run(cli: Cli) -> Result<i32, Failure> {
    match cli.command {
        Command::Compile { model, hypers, input, output, dump_ir } => {
            let src = read(&model)?;
            let hypers: BTreeMap<String, i64> = match hypers {
                Some(p) => serde_json::from_str(&read(&p)?).map_err(|e| usage(format!("{}: {e}", p.display())))?,
                None => BTreeMap::new(),
            };
            let input = input.map(|p| read(&p)).transpose()?;
            let output = output.map(|p| read(&p)).transpose()?;
            let checked = compile_source(&src, &hypers, input.as_deref(), output.as_deref()).map_err(usage)?;
            for w in &checked.warnings {
                eprintln!("warning: {}: {}", w.location, w.message);
            }
            let g = compile_graph(&checked).map_err(usage)?;
            if dump_ir {
                print!("{}", dump_graph(&g));
            } else {
                println!(
                    "variables {}\nfactors {}\ngates {}\nfree_params {}\nlog2_search_space {:.3}",
                    g.variables.len(),
                    g.factors.len(),
                    g.gates.len(),
                    g.free_params.len(),
                    g.log2_search_space()
                );
            }
            Ok(0)
        }
        Command::Solve { task: t, backend, solver } => {
            let backend = Backend::from(backend);
            let opts = solve_options(&solver, backend)?;
            let r = solve_task(&task(&t)?, backend, &opts)?;
            print!("{}", report_json(&r));
            Ok(r.status.exit_code())
        }
        Command::Verify { task: t, assignment } => {
            let g = task(&t)?.graph().map_err(usage)?;
            let text = read(&assignment)?;
            let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", assignment.display())))?;
            let v = v.get("assignment").cloned().unwrap_or(v);
            let named: BTreeMap<String, u32> = serde_json::from_value(v).map_err(|e| usage(format!("{}: {e}", assignment.display())))?;
            let a = ParamAssignment::from_named(&g, &named).map_err(usage)?;
            let trace = execute(&g, &a, &[]);
            for o in trace.observations.iter().filter(|o| o.actual != Some(o.expected)) {
                eprintln!("mismatch: {} observed {} but computed {:?}", g.variables[o.var].name, o.expected, o.actual);
            }
            if let Some(f) = &trace.fault {
                eprintln!("fault: {f:?}");
            }
            if check_consistency(&g, &a) {
                println!("consistent");
                Ok(0)
            } else {
                println!("inconsistent");
                Ok(1)
            }
        }
        Command::Emit { task: t, format, output, relaxation } => {
            let spec = task(&t)?;
            let checked = spec.compile().map_err(usage)?;
            let text = match format {
                Format::Smt2 => emit_smtlib(&checked).map_err(usage)?,
                Format::Sk => emit_sketch(&checked).text(),
                Format::Lp => {
                    let g = compile_graph(&checked).map_err(usage)?;
                    let model = build_lp(&g, LpOptions { milp: !relaxation, ..LpOptions::default() });
                    let io_err = |e: std::io::Error| usage(e.to_string());
                    match &output {
                        Some(p) => {
                            let f = std::fs::File::create(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
                            let mut w = std::io::BufWriter::new(f);
                            write_lp(&model, &mut w).map_err(io_err)?;
                            w.flush().map_err(io_err)?;
                        }
                        None => {
                            let mut w = std::io::BufWriter::new(std::io::stdout().lock());
                            write_lp(&model, &mut w).map_err(io_err)?;
                            w.flush().map_err(io_err)?;
                        }
                    }
                    return Ok(0);
                }
            };
            write_out(output.as_deref(), &text)?;
            Ok(0)
        }
        Command::Bench { suite, backends, report, solver } => {
            let prefixes: &[&str] = match suite {
                Suite::Parity => &["parity_"],
                Suite::Turing => &["turing_"],
                Suite::Circuits => &["circuit_", "nand_"],
                Suite::Bblock => &["bblock_"],
                Suite::Assembly => &["assembly_"],
            };
            let mut csv = String::from("task,log10_d,backend,status,wall_ms\n");
            let mut failed = false;
            for spec in builtin_tasks() {
                if spec.meta.shipped_only || !prefixes.iter().any(|p| spec.name.starts_with(p)) {
                    continue;
                }
                let log10_d = match (spec.meta.family, spec.meta.t) {
                    (Some(f), Some(t)) => difficulty_metrics(f, &spec.meta.sizes, t).map(|d| format!("{:.1}", d.log10_d)).unwrap_or_default(),
                    _ => String::new(),
                };
                for &b in &backends {
                    let backend = Backend::from(b);
                    let opts = solve_options(&solver, backend)?;
                    let (status, ms) = match solve_task(&spec, backend, &opts) {
                        Ok(r) => (serde_json::to_value(r.status).unwrap().as_str().unwrap().to_string(), format!("{:.0}", r.wall_ms)),
                        Err(SolveError::NoSmtSolver) => ("skipped".to_string(), String::new()),
                        Err(e) => {
                            eprintln!("{} {}: {e}", spec.name, backend.name());
                            failed = true;
                            ("error".to_string(), String::new())
                        }
                    };
                    eprintln!("{:28} {:5} {:12} {:>10} ms", spec.name, backend.name(), status, ms);
                    writeln!(csv, "{},{},{},{},{}", spec.name, log10_d, backend.name(), status, ms).unwrap();
                }
            }
            match &report {
                Some(p) => write_out(Some(p), &csv)?,
                None => print!("{csv}"),
            }
            Ok(if failed { 3 } else { 0 })
        }
        Command::Search { task: t, settings, seeds, master_seed, distribution } => {
            let g = task(&t)?.graph().map_err(usage)?;
            let dist = match distribution {
                Some(p) => {
                    let d: HyperDistribution = serde_json::from_str(&read(&p)?).map_err(|e| usage(format!("{}: {e}", p.display())))?;
                    d.validate().map_err(usage)?;
                    d
                }
                None => HyperDistribution::default(),
            };
            let r = random_search(&g, &dist, settings, seeds, master_seed);
            println!("{}", serde_json::to_string_pretty(&r).unwrap());
            Ok(if r.best_fraction > 0.0 { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Backend(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}

//! Unrolling and the gated factor graph.

pub mod dump;
pub mod graph;
pub mod metrics;
pub mod unroll;

pub use dump::dump_graph;
pub use graph::{
    build_graph, compile_graph, eval_uexpr, evaluate_entry, tabulate_function, Factor, FactorId, FactorKind, FactorTable, Family, FamilyId,
    GateId, GatedFactorGraph, Gate, GhostSite, IrError, Item, ParamAssignment, TableEntry, VarId, Variable, ROOT,
};
pub use metrics::{difficulty_metrics, log10_search_space, Difficulty, FamilySizes, MetricsError, ModelFamily};
pub use unroll::{unroll, CellId, UExpr, UStmt, UnrollError, Unrolled};

//! The benchmark corpus: task definitions, example generators and the
//! parity-chain island configurations.

mod islands;
pub mod reference;
mod tasks;

pub use islands::island_configs;
pub use tasks::{
    builtin_task, builtin_tasks, gen_examples, load_task, resolve_task, BenchError, TaskMeta, TaskSpec,
};

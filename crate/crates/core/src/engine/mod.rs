//! Plan execution: a reference evaluator over in-memory tables, a
//! deterministic cost simulator, constraint checks and the trace log.

mod adapter;
mod constraints;
mod reference;
mod relation;
pub mod simulator;
mod trace;

use thiserror::Error;

pub use adapter::{EngineAdapter, ExecutionOutcome, ExecutionRequest, Serialized, SimulatorAdapter};
pub use constraints::{check_feasible, Constraints, ResourceSnapshot};
pub use reference::evaluate_reference;
pub use relation::{multiset_eq, Relation, Value};
pub use simulator::{plan_work, simulate_execution, Measurement, PlanWork, SimulatorParams};
pub use trace::{ExecutionTrace, TraceRecord};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("missing table `{0}`")]
    MissingTable(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("unsupported by the reference evaluator: {0}")]
    Unsupported(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("row has {found} fields, expected {expected}")]
    Arity { expected: usize, found: usize },
    #[error("csv: {0}")]
    Csv(String),
    #[error("io: {0}")]
    Io(String),
    #[error("constraints must be positive and finite (c_mem={c_mem}, c_lat={c_lat})")]
    InvalidConstraints { c_mem: f64, c_lat: f64 },
    #[error("invalid resources (memory_in_use={memory_in_use}, cpu_load={cpu_load})")]
    InvalidResources { memory_in_use: f64, cpu_load: f64 },
    #[error("execution of `{query_id}` failed: {message}")]
    Execution { query_id: String, message: String },
}

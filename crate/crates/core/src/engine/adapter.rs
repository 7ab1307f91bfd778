use std::sync::Mutex;

use super::constraints::{check_feasible, Constraints, ResourceSnapshot};
use super::simulator::{simulate_execution, Measurement, SimulatorParams};
use super::EngineError;
use crate::ir::{QueryIR, SchemaModel};
use crate::teacher::PlanCandidate;

pub struct ExecutionRequest<'a> {
    pub query_id: &'a str,
    pub original: &'a QueryIR,
    pub candidate: &'a PlanCandidate,
    pub schema: &'a SchemaModel,
    pub resources: ResourceSnapshot,
    pub constraints: Constraints,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExecutionOutcome {
    Completed(Measurement),
    /// The plan ran but exceeded a cap.
    ResourceViolation(Measurement),
}

impl ExecutionOutcome {
    pub fn measurement(&self) -> Measurement {
        match self {
            ExecutionOutcome::Completed(m) | ExecutionOutcome::ResourceViolation(m) => *m,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, ExecutionOutcome::Completed(_))
    }

    pub fn classify(m: Measurement, constraints: &Constraints) -> Self {
        if check_feasible(m.latency_ms, m.memory_bytes, constraints) {
            ExecutionOutcome::Completed(m)
        } else {
            ExecutionOutcome::ResourceViolation(m)
        }
    }
}

/// A backend that can run a rewritten plan and report its cost.
///
/// Implementations must be deterministic in `(request, seed)` so searches
/// replay exactly.
pub trait EngineAdapter: Send + Sync {
    fn name(&self) -> &str;
    fn execute(&self, request: &ExecutionRequest<'_>) -> Result<ExecutionOutcome, EngineError>;
}

#[derive(Debug, Clone, Default)]
pub struct SimulatorAdapter {
    pub params: SimulatorParams,
}

impl SimulatorAdapter {
    pub fn new(params: SimulatorParams) -> Self {
        Self { params }
    }
}

impl EngineAdapter for SimulatorAdapter {
    fn name(&self) -> &str {
        "sim"
    }

    fn execute(&self, req: &ExecutionRequest<'_>) -> Result<ExecutionOutcome, EngineError> {
        let m = simulate_execution(
            req.candidate,
            req.original,
            req.schema,
            &req.resources,
            req.seed,
            &self.params,
        );
        if !m.latency_ms.is_finite() || !m.memory_bytes.is_finite() {
            return Err(EngineError::Execution {
                query_id: req.query_id.to_string(),
                message: "non-finite measurement".into(),
            });
        }
        Ok(ExecutionOutcome::classify(m, &req.constraints))
    }
}

/// Serializes calls into an adapter that cannot run concurrently.
pub struct Serialized<A> {
    inner: Mutex<A>,
    name: String,
}

impl<A: EngineAdapter> Serialized<A> {
    pub fn new(inner: A) -> Self {
        let name = format!("serialized-{}", inner.name());
        Self {
            inner: Mutex::new(inner),
            name,
        }
    }
}

impl<A: EngineAdapter> EngineAdapter for Serialized<A> {
    fn name(&self) -> &str {
        &self.name
    }

    fn execute(&self, req: &ExecutionRequest<'_>) -> Result<ExecutionOutcome, EngineError> {
        let guard = self.inner.lock().map_err(|_| EngineError::Execution {
            query_id: req.query_id.to_string(),
            message: "adapter lock poisoned".into(),
        })?;
        guard.execute(req)
    }
}

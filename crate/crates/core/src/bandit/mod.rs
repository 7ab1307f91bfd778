//! UCB1 search over the 64 plan configurations of one query.

mod ucb;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost_model::LatencyPredictor;
use crate::engine::{
    Constraints, EngineAdapter, EngineError, ExecutionOutcome, ExecutionRequest, ResourceSnapshot,
    TraceRecord,
};
use crate::ir::{QueryIR, SchemaModel};
use crate::teacher::{apply_plan, PlanCandidate, PlanConfig, TeacherConfig, ARM_COUNT};

pub use ucb::{regret_curve, reward, ucb1_score, Ucb1};
pub(crate) use ucb::argmax_lowest;

#[derive(Debug, Error)]
pub enum BanditError {
    #[error("baseline latency must be positive, got {0}")]
    NonPositiveBaseline(f64),
    #[error("arm scored before its first pull")]
    UnpulledArm,
    #[error("invalid search config: {0}")]
    InvalidConfig(String),
    #[error("search for `{query_id}` aborted after {} rounds: {source}", trace.len())]
    Execution {
        query_id: String,
        trace: Vec<TraceEntry>,
        #[source]
        source: EngineError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub max_iterations: usize,
    pub ci_width_threshold: f64,
    pub confidence_pulls: u64,
    /// Passed to the executor with every request.
    pub seed: u64,
    /// An arm whose predicted latency exceeds `prune_factor · c_lat` is not run.
    pub prune_factor: f64,
    pub teacher: TeacherConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            ci_width_threshold: 0.2,
            confidence_pulls: 5,
            seed: 0,
            prune_factor: 1.5,
            teacher: TeacherConfig::default(),
        }
    }
}

impl SearchConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<(), BanditError> {
        if self.max_iterations < ARM_COUNT {
            return Err(BanditError::InvalidConfig(format!(
                "max_iterations {} below arm count {ARM_COUNT}",
                self.max_iterations
            )));
        }
        if !(self.ci_width_threshold > 0.0) || !(self.prune_factor > 0.0) {
            return Err(BanditError::InvalidConfig(
                "ci_width_threshold and prune_factor must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    Budget,
    CiWidth,
    ConfidentFeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub round: u64,
    pub arm: usize,
    pub reward: f64,
    /// Predicted latency for pruned entries.
    pub latency_ms: f64,
    pub memory_bytes: f64,
    pub feasible: bool,
    /// Skipped on the cost model's prediction; not executed.
    pub pruned: bool,
}

/// Per-query search statistics.
///
/// Invariants: `round == Σ pulls`; `best_feasible_arm`, when set, has at
/// least one feasible observation.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditState {
    pub policy: Ucb1<f64>,
    feasible_pulls: Vec<u64>,
}

impl BanditState {
    pub fn new(arms: usize) -> Self {
        Self {
            policy: Ucb1::new(arms),
            feasible_pulls: vec![0; arms],
        }
    }

    pub fn round(&self) -> u64 {
        self.policy.round()
    }

    pub fn record(&mut self, arm: usize, reward: f64, feasible: bool) {
        self.policy.update(arm, reward);
        if feasible {
            self.feasible_pulls[arm] += 1;
        }
    }

    pub fn best_feasible_arm(&self) -> Option<usize> {
        let means = self.policy.means();
        let candidates = (0..means.len()).map(|a| {
            if self.feasible_pulls[a] > 0 {
                means[a]
            } else {
                f64::NEG_INFINITY
            }
        });
        argmax_lowest(candidates).filter(|&a| self.feasible_pulls[a] > 0)
    }

    /// Highest mean among feasible-observed arms, else highest mean overall.
    pub fn chosen_arm(&self) -> usize {
        self.best_feasible_arm().unwrap_or_else(|| {
            let means = self.policy.means();
            argmax_lowest((0..means.len()).map(|a| {
                if self.policy.pulls()[a] > 0 {
                    means[a]
                } else {
                    f64::NEG_INFINITY
                }
            }))
            .unwrap_or(0)
        })
    }

    /// Checks the confidence conditions, in order: a well-sampled feasible
    /// arm beating every other arm's upper bound, then a narrow interval
    /// around the current best arm.
    pub fn should_stop(&self, cfg: &SearchConfig) -> Option<TerminationReason> {
        if !self.policy.initialized() {
            return None;
        }
        let pulls = self.policy.pulls();
        let means = self.policy.means();
        let scores: Vec<f64> = (0..pulls.len())
            .map(|a| self.policy.score(a).expect("initialized"))
            .collect();
        let confident = (0..pulls.len()).any(|i| {
            self.feasible_pulls[i] > 0
                && pulls[i] >= cfg.confidence_pulls
                && (0..pulls.len()).all(|j| j == i || means[i] > scores[j])
        });
        if confident {
            return Some(TerminationReason::ConfidentFeasible);
        }
        let best = self.chosen_arm();
        let t = self.policy.round() as f64;
        let width = 2.0 * (2.0 * t.ln() / pulls[best] as f64).sqrt();
        if width < cfg.ci_width_threshold {
            return Some(TerminationReason::CiWidth);
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub query_id: String,
    pub chosen_arm: usize,
    pub termination_reason: TerminationReason,
    pub rounds: u64,
    /// Rounds that ran the plan, i.e. excluding pruned ones.
    pub executions: u64,
    pub baseline_latency_ms: f64,
    pub trace: Vec<TraceEntry>,
}

/// The serialized form of a search outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSummary {
    pub chosen_arm: usize,
    pub termination_reason: TerminationReason,
    pub rounds: u64,
}

impl SearchResult {
    pub fn summary(&self) -> SearchSummary {
        SearchSummary {
            chosen_arm: self.chosen_arm,
            termination_reason: self.termination_reason,
            rounds: self.rounds,
        }
    }

    /// Executed entries as engine trace records; pruned rounds are omitted.
    pub fn trace_records(&self, seed: u64) -> Vec<TraceRecord> {
        self.trace
            .iter()
            .filter(|e| !e.pruned)
            .map(|e| TraceRecord {
                query_id: self.query_id.clone(),
                arm: e.arm,
                flags: PlanConfig::from_index(e.arm).expect("arm in range").bitstring(),
                latency_ms: e.latency_ms,
                memory_bytes: e.memory_bytes,
                feasible: e.feasible,
                seed,
            })
            .collect()
    }
}

/// Everything the executor needs about one query.
#[derive(Clone, Copy)]
pub struct QueryContext<'a> {
    pub query_id: &'a str,
    pub ir: &'a QueryIR,
    pub schema: &'a SchemaModel,
    pub constraints: Constraints,
    pub resources: ResourceSnapshot,
}

impl<'a> QueryContext<'a> {
    pub fn execute(
        &self,
        executor: &dyn EngineAdapter,
        candidate: &PlanCandidate,
        seed: u64,
    ) -> Result<ExecutionOutcome, EngineError> {
        executor.execute(&ExecutionRequest {
            query_id: self.query_id,
            original: self.ir,
            candidate,
            schema: self.schema,
            resources: self.resources,
            constraints: self.constraints,
            seed,
        })
    }

    /// Runs the all-off plan once.
    pub fn measure_baseline(
        &self,
        executor: &dyn EngineAdapter,
        teacher: &TeacherConfig,
        seed: u64,
    ) -> Result<ExecutionOutcome, EngineError> {
        let plan = apply_plan(self.ir, PlanConfig::BASELINE, self.schema, teacher);
        self.execute(executor, &plan, seed)
    }
}

/// UCB1 search for one query.
///
/// Every arm is pulled once in index order, then the arm with the highest
/// UCB score is pulled until a termination condition holds. With a
/// predictor, an arm predicted slower than `prune_factor · c_lat` records a
/// reward of `-1` without running.
pub fn search(
    ctx: &QueryContext<'_>,
    executor: &dyn EngineAdapter,
    baseline_latency_ms: f64,
    cfg: &SearchConfig,
    predictor: Option<&dyn LatencyPredictor>,
) -> Result<SearchResult, BanditError> {
    cfg.validate()?;
    if !(baseline_latency_ms > 0.0) {
        return Err(BanditError::NonPositiveBaseline(baseline_latency_ms));
    }
    let mut state = BanditState::new(ARM_COUNT);
    let mut plans: Vec<Option<PlanCandidate>> = vec![None; ARM_COUNT];
    let mut predictions: Vec<Option<f64>> = vec![None; ARM_COUNT];
    let mut trace = Vec::with_capacity(cfg.max_iterations);
    let mut executions = 0u64;

    let reason = loop {
        if trace.len() >= cfg.max_iterations {
            break TerminationReason::Budget;
        }
        let arm = state.policy.select();
        let config = PlanConfig::from_index(arm).expect("arm in range");
        let round = state.round() + 1;

        if let Some(p) = predictor {
            let predicted = *predictions[arm].get_or_insert_with(|| {
                p.predict_latency(ctx.ir, config, ctx.schema, &ctx.resources, &ctx.constraints)
            });
            if predicted > cfg.prune_factor * ctx.constraints.c_lat {
                state.record(arm, -1.0, false);
                trace.push(TraceEntry {
                    round,
                    arm,
                    reward: -1.0,
                    latency_ms: predicted,
                    memory_bytes: 0.0,
                    feasible: false,
                    pruned: true,
                });
                if let Some(r) = state.should_stop(cfg) {
                    break r;
                }
                continue;
            }
        }

        let plan = plans[arm].get_or_insert_with(|| apply_plan(ctx.ir, config, ctx.schema, &cfg.teacher));
        let outcome = match ctx.execute(executor, plan, cfg.seed) {
            Ok(o) => o,
            Err(source) => {
                return Err(BanditError::Execution {
                    query_id: ctx.query_id.to_string(),
                    trace,
                    source,
                })
            }
        };
        executions += 1;
        let m = outcome.measurement();
        let feasible = outcome.is_feasible();
        let r = reward(m.latency_ms, baseline_latency_ms, feasible)?;
        state.record(arm, r, feasible);
        trace.push(TraceEntry {
            round,
            arm,
            reward: r,
            latency_ms: m.latency_ms,
            memory_bytes: m.memory_bytes,
            feasible,
            pruned: false,
        });
        if let Some(r) = state.should_stop(cfg) {
            break r;
        }
    };

    Ok(SearchResult {
        query_id: ctx.query_id.to_string(),
        chosen_arm: state.chosen_arm(),
        termination_reason: reason,
        rounds: state.round(),
        executions,
        baseline_latency_ms,
        trace,
    })
}

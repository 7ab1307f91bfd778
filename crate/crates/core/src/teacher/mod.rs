//! Rule-based teacher planner.
//!
//! Every [`PlanConfig`] maps to one rewritten query. Enabled strategies are
//! applied in the fixed order of [`Strategy::APPLICATION_ORDER`]; a strategy
//! whose preconditions fail is a no-op and is left out of
//! [`PlanCandidate::applied`].

pub mod cardinality;
mod config;
mod rewrite;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::{render_sql, QueryIR, SchemaModel};

pub use cardinality::{estimate_cardinality, estimate_with_scope, CardinalityScope};
pub use config::{enumerate_configs, PlanConfig, Strategy, ARM_COUNT};

pub const DEFAULT_SAMPLE_RATE: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TeacherError {
    #[error("sample rate {0} outside (0, 1]")]
    SampleRate(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeacherConfig {
    sample_rate: f64,
}

impl Default for TeacherConfig {
    fn default() -> Self {
        Self {
            sample_rate: DEFAULT_SAMPLE_RATE,
        }
    }
}

impl TeacherConfig {
    pub fn new(sample_rate: f64) -> Result<Self, TeacherError> {
        check_rate(sample_rate)?;
        Ok(Self { sample_rate })
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }
}

fn check_rate(rate: f64) -> Result<(), TeacherError> {
    if rate > 0.0 && rate <= 1.0 {
        Ok(())
    } else {
        Err(TeacherError::SampleRate(rate))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanCandidate {
    pub config: PlanConfig,
    pub ir: QueryIR,
    pub applied: Vec<Strategy>,
}

impl PlanCandidate {
    /// Whether the plan returns approximate results.
    pub fn is_approximate(&self) -> bool {
        self.applied.contains(&Strategy::Sampling)
    }

    pub fn sql(&self) -> String {
        render_sql(&self.ir)
    }
}

/// Rewrites `ir` according to `config`.
pub fn apply_plan(
    ir: &QueryIR,
    config: PlanConfig,
    schema: &SchemaModel,
    teacher: &TeacherConfig,
) -> PlanCandidate {
    let mut current = ir.clone();
    let mut applied = Vec::new();
    for strategy in Strategy::APPLICATION_ORDER {
        if !config.is_enabled(strategy) {
            continue;
        }
        let next = match strategy {
            Strategy::EarlyFilter => rewrite::try_early_filter(&current),
            Strategy::ProjectionPushdown => rewrite::try_projection_pushdown(&current, schema),
            Strategy::PreAggregation => rewrite::try_pre_aggregation(&current),
            Strategy::JoinReorder => rewrite::try_join_reorder(&current, schema),
            Strategy::LimitPushdown => rewrite::try_limit_pushdown(&current),
            Strategy::Sampling => rewrite::try_sampling(&current, teacher.sample_rate, schema),
        };
        if let Some(next) = next {
            current = next;
            applied.push(strategy);
        }
    }
    PlanCandidate {
        config,
        ir: current,
        applied,
    }
}

/// Moves every single-table predicate into a derived table over its table.
pub fn rewrite_early_filter(ir: &QueryIR) -> QueryIR {
    rewrite::try_early_filter(ir).unwrap_or_else(|| ir.clone())
}

/// Narrows each table to the columns the rest of the query references.
pub fn rewrite_projection_pushdown(ir: &QueryIR, schema: &SchemaModel) -> QueryIR {
    rewrite::try_projection_pushdown(ir, schema).unwrap_or_else(|| ir.clone())
}

/// Aggregates one table below its joins, with partial-aggregate
/// recombination above them.
pub fn rewrite_pre_aggregation(ir: &QueryIR) -> QueryIR {
    rewrite::try_pre_aggregation(ir).unwrap_or_else(|| ir.clone())
}

pub fn rewrite_join_reorder(ir: &QueryIR, schema: &SchemaModel) -> QueryIR {
    rewrite::try_join_reorder(ir, schema).unwrap_or_else(|| ir.clone())
}

pub fn rewrite_limit_pushdown(ir: &QueryIR) -> QueryIR {
    rewrite::try_limit_pushdown(ir).unwrap_or_else(|| ir.clone())
}

/// Samples the largest table at `rate`. The result is approximate.
pub fn rewrite_sampling(ir: &QueryIR, rate: f64, schema: &SchemaModel) -> Result<QueryIR, TeacherError> {
    check_rate(rate)?;
    Ok(rewrite::try_sampling(ir, rate, schema).unwrap_or_else(|| ir.clone()))
}

/// Table order the join-reorder rewrite would produce, as indices into
/// `ir.base_tables`.
pub fn greedy_join_order(ir: &QueryIR, schema: &SchemaModel) -> Vec<usize> {
    rewrite::greedy_join_order(ir, schema)
}

/// Rebuilds `ir` with its tables permuted by `order`.
pub fn reorder_tables(ir: &QueryIR, order: &[usize]) -> QueryIR {
    rewrite::reorder_tables(ir, order)
}

#[cfg(test)]
mod tests;

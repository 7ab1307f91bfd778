use crate::engine::{Constraints, ResourceSnapshot};
use crate::ir::{QueryIR, SchemaModel};
use crate::teacher::{PlanConfig, Strategy};

/// Tag stored with every serialized model; bumped whenever the layout changes.
pub const FEATURE_LAYOUT: &str = "plan-features-v1";
pub const FEATURE_DIM: usize = 13;
/// Student inputs: the trailing entries of the full vector, without flags.
pub const QUERY_FEATURE_DIM: usize = 7;
pub const FLAG_DIM: usize = FEATURE_DIM - QUERY_FEATURE_DIM;

pub const FEATURE_NAMES: [&str; FEATURE_DIM] = [
    "early_filter",
    "projection_pushdown",
    "pre_aggregation",
    "join_reorder",
    "sampling",
    "limit_pushdown",
    "table_count",
    "join_count",
    "predicate_count",
    "log10_rows",
    "log10_max_distinct",
    "memory_pressure",
    "cpu_load",
];

/// Layout: `[flags; 6] ++ [tables, joins, predicates] ++ [log10(1+Σrows),
/// log10(1+max distinct)] ++ [memory_in_use / c_mem, cpu_load]`.
pub type FeatureVector = [f64; FEATURE_DIM];

/// Query-only part of the layout.
pub fn query_features(
    ir: &QueryIR,
    schema: &SchemaModel,
    resources: &ResourceSnapshot,
    constraints: &Constraints,
) -> [f64; QUERY_FEATURE_DIM] {
    let cm = ir.complexity();
    let rows: u64 = ir
        .base_tables
        .iter()
        .filter_map(|t| schema.table(t.base_table()))
        .map(|t| t.rows)
        .sum();
    let max_distinct = ir
        .column_refs()
        .into_iter()
        .filter_map(|c| {
            let table = ir.table_ref(&c.alias)?.base_table();
            schema.distinct(table, &c.column)
        })
        .max()
        .unwrap_or(0);
    [
        cm.table_count as f64,
        cm.join_count as f64,
        cm.predicate_count as f64,
        (1.0 + rows as f64).log10(),
        (1.0 + max_distinct as f64).log10(),
        resources.memory_in_use / constraints.c_mem,
        resources.cpu_load,
    ]
}

pub fn featurize(
    ir: &QueryIR,
    config: PlanConfig,
    schema: &SchemaModel,
    resources: &ResourceSnapshot,
    constraints: &Constraints,
) -> FeatureVector {
    with_flags(config, &query_features(ir, schema, resources, constraints))
}

/// Prepends the plan flags to query features.
pub fn with_flags(config: PlanConfig, query: &[f64; QUERY_FEATURE_DIM]) -> FeatureVector {
    let mut fv = [0.0; FEATURE_DIM];
    for s in Strategy::ALL {
        fv[s.bit() as usize] = if config.is_enabled(s) { 1.0 } else { 0.0 };
    }
    fv[FLAG_DIM..].copy_from_slice(query);
    fv
}

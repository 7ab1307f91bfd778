//! Textbook cardinality estimation.
//!
//! Filtered table size is `rows × Π predicate selectivity`, with equality
//! `1/d`, range `1/3` and inequality `1 − 1/d` for a column with `d` distinct
//! values. An equi-join contributes `1/max(d_left, d_right)`.

use crate::ir::{CmpOp, ColumnRef, Predicate, QueryIR, SchemaModel, TableRef};

pub const RANGE_SELECTIVITY: f64 = 1.0 / 3.0;

/// Which predicates count towards a table's size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CardinalityScope {
    /// Every predicate on the table, wherever it sits in the plan.
    Logical,
    /// Only predicates evaluated below the joins, i.e. inside derived tables.
    /// Top-level predicates are applied after all joins.
    Pipeline,
}

pub fn predicate_selectivity(op: CmpOp, distinct: u64) -> f64 {
    let d = distinct.max(1) as f64;
    match op {
        CmpOp::Eq => 1.0 / d,
        CmpOp::Ne => 1.0 - 1.0 / d,
        CmpOp::Lt | CmpOp::Gt | CmpOp::Le | CmpOp::Ge => RANGE_SELECTIVITY,
    }
}

fn column_distinct(tref: &TableRef, column: &str, schema: &SchemaModel) -> u64 {
    schema.distinct(tref.base_table(), column).unwrap_or(1)
}

fn selectivity_of(tref: &TableRef, preds: &[&Predicate], schema: &SchemaModel) -> f64 {
    preds
        .iter()
        .map(|p| predicate_selectivity(p.op, column_distinct(tref, &p.column.column, schema)))
        .product()
}

/// Rows scanned from storage for `tref`, after sampling and pushed-down limits.
pub fn scan_rows(tref: &TableRef, schema: &SchemaModel) -> f64 {
    let rows = schema.table(tref.base_table()).map_or(0, |t| t.rows) as f64;
    match tref.derived() {
        None => rows,
        Some(inner) => {
            let sampled = rows * inner.sample_rate.unwrap_or(1.0);
            match inner.limit {
                // Early termination: stop once `limit` rows passed the filter.
                Some(n) if inner.group_by.is_empty() => {
                    let preds: Vec<&Predicate> = inner.predicates.iter().collect();
                    let sel = selectivity_of(tref, &preds, schema);
                    if sel > 0.0 {
                        sampled.min(n as f64 / sel)
                    } else {
                        sampled
                    }
                }
                _ => sampled,
            }
        }
    }
}

/// Output rows of `tref` before any top-level predicate.
pub fn relation_rows(tref: &TableRef, schema: &SchemaModel) -> f64 {
    let rows = schema.table(tref.base_table()).map_or(0, |t| t.rows) as f64;
    let Some(inner) = tref.derived() else {
        return rows;
    };
    let preds: Vec<&Predicate> = inner.predicates.iter().collect();
    let mut out = rows * inner.sample_rate.unwrap_or(1.0) * selectivity_of(tref, &preds, schema);
    if !inner.group_by.is_empty() {
        let groups: f64 = inner
            .group_by
            .iter()
            .map(|c| column_distinct(tref, &c.column, schema) as f64)
            .product();
        out = out.min(groups);
    }
    if let Some(n) = inner.limit {
        out = out.min(n as f64);
    }
    out
}

/// Estimated output rows of `alias` under `scope`.
pub fn table_rows(ir: &QueryIR, alias: &str, schema: &SchemaModel, scope: CardinalityScope) -> f64 {
    let Some(tref) = ir.table_ref(alias) else {
        return 0.0;
    };
    let base = relation_rows(tref, schema);
    match scope {
        CardinalityScope::Pipeline => base,
        CardinalityScope::Logical => {
            let top: Vec<&Predicate> = ir.predicates.iter().filter(|p| p.column.alias == alias).collect();
            base * selectivity_of(tref, &top, schema)
        }
    }
}

fn join_key_distinct(ir: &QueryIR, c: &ColumnRef, schema: &SchemaModel) -> u64 {
    ir.table_ref(&c.alias)
        .map_or(1, |t| column_distinct(t, &c.column, schema))
}

/// Estimated rows produced by joining the tables named in `aliases`.
pub fn estimate_with_scope(
    aliases: &[&str],
    ir: &QueryIR,
    schema: &SchemaModel,
    scope: CardinalityScope,
) -> f64 {
    if aliases.is_empty() {
        return 0.0;
    }
    let mut card: f64 = aliases
        .iter()
        .map(|a| table_rows(ir, a, schema, scope))
        .product();
    for j in &ir.joins {
        if aliases.contains(&j.left.alias.as_str()) && aliases.contains(&j.right.alias.as_str()) {
            let d = join_key_distinct(ir, &j.left, schema).max(join_key_distinct(ir, &j.right, schema));
            card /= d.max(1) as f64;
        }
    }
    card.max(0.0)
}

/// Logical cardinality of the join over `aliases`.
pub fn estimate_cardinality(aliases: &[&str], ir: &QueryIR, schema: &SchemaModel) -> f64 {
    estimate_with_scope(aliases, ir, schema, CardinalityScope::Logical)
}

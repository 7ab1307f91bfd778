//! The six plan rewrites. Each `try_*` function returns `None` when the
//! rewrite is inapplicable or would leave the query unchanged.

use std::collections::BTreeSet;

use crate::ir::{
    AggFunc, ColumnRef, QueryIR, SchemaModel, SelectExpr, SelectItem, TableSource,
};

use super::cardinality::estimate_cardinality;

/// Returns the derived table behind `alias`, wrapping a base table in
/// `SELECT * FROM table AS alias` first if needed.
fn derived_mut<'a>(ir: &'a mut QueryIR, alias: &str) -> &'a mut QueryIR {
    let tref = ir.table_ref_mut(alias).expect("alias exists in a valid IR");
    if let TableSource::Base(name) = &tref.source {
        tref.source = TableSource::Derived(Box::new(QueryIR::scan(name.clone(), alias)));
    }
    match &mut tref.source {
        TableSource::Derived(inner) => inner,
        TableSource::Base(_) => unreachable!(),
    }
}

fn accepts_pushed_rows(ir: &QueryIR, alias: &str) -> bool {
    ir.table_ref(alias)
        .and_then(|t| t.derived())
        .is_none_or(|inner| inner.group_by.is_empty() && inner.limit.is_none())
}

pub(crate) fn try_early_filter(ir: &QueryIR) -> Option<QueryIR> {
    let mut out = ir.clone();
    let mut kept = Vec::new();
    let mut moved = false;
    for p in std::mem::take(&mut out.predicates) {
        if accepts_pushed_rows(&out, &p.column.alias) {
            derived_mut(&mut out, &p.column.alias.clone()).predicates.push(p);
            moved = true;
        } else {
            kept.push(p);
        }
    }
    out.predicates = kept;
    moved.then_some(out)
}

pub(crate) fn try_projection_pushdown(ir: &QueryIR, schema: &SchemaModel) -> Option<QueryIR> {
    let needed: BTreeSet<(&str, &str)> = ir
        .column_refs()
        .into_iter()
        .map(|c| (c.alias.as_str(), c.column.as_str()))
        .collect();
    let mut out = ir.clone();
    let mut changed = false;
    for tref in &ir.base_tables {
        if tref.derived().is_some_and(|inner| !inner.group_by.is_empty()) {
            continue;
        }
        let available = tref.output_columns(schema);
        let mut keep: Vec<&String> = available
            .iter()
            .filter(|c| needed.contains(&(tref.alias.as_str(), c.as_str())))
            .collect();
        if keep.is_empty() {
            // A derived table must expose at least one column.
            keep.extend(available.first());
        }
        if keep.len() == available.len() {
            continue;
        }
        let alias = tref.alias.clone();
        let projections = keep
            .into_iter()
            .map(|c| SelectItem::column(ColumnRef::new(alias.clone(), c.clone())))
            .collect();
        derived_mut(&mut out, &alias).projections = projections;
        changed = true;
    }
    changed.then_some(out)
}

/// The alias that owns every grouping key and aggregate input, if one does.
fn pre_aggregation_alias(ir: &QueryIR) -> Option<String> {
    if ir.group_by.is_empty() || ir.base_tables.len() < 2 {
        return None;
    }
    let alias = ir.group_by[0].alias.clone();
    if ir.group_by.iter().any(|c| c.alias != alias) {
        return None;
    }
    for p in &ir.projections {
        match &p.expr {
            SelectExpr::Aggregate { arg: Some(c), .. } if c.alias != alias => return None,
            SelectExpr::Ratio(..) | SelectExpr::Star => return None,
            _ => {}
        }
    }
    for j in &ir.joins {
        if let Some(side) = j.side(&alias) {
            if !ir.group_by.contains(side) {
                return None;
            }
        }
    }
    accepts_pushed_rows(ir, &alias).then_some(alias)
}

pub(crate) fn try_pre_aggregation(ir: &QueryIR) -> Option<QueryIR> {
    let alias = pre_aggregation_alias(ir)?;
    let mut out = ir.clone();

    let (local, rest): (Vec<_>, Vec<_>) = std::mem::take(&mut out.predicates)
        .into_iter()
        .partition(|p| p.column.alias == alias);
    out.predicates = rest;

    let taken: BTreeSet<String> = ir.group_by.iter().map(|c| c.column.clone()).collect();
    let mut next = 0usize;
    let mut fresh = || loop {
        let name = format!("p{next}");
        next += 1;
        if !taken.contains(&name) {
            return name;
        }
    };

    let mut partials: Vec<SelectItem> = Vec::new();
    let mut outer_items = Vec::with_capacity(ir.projections.len());
    for item in &ir.projections {
        let expr = match &item.expr {
            SelectExpr::Aggregate { func, arg } => {
                let mut partial = |f: AggFunc| {
                    let name = fresh();
                    partials.push(SelectItem::aggregate(f, arg.clone()).named(name.clone()));
                    ColumnRef::new(alias.clone(), name)
                };
                match func {
                    AggFunc::Count | AggFunc::Sum => SelectExpr::Aggregate {
                        func: AggFunc::Sum,
                        arg: Some(partial(*func)),
                    },
                    AggFunc::Min | AggFunc::Max => SelectExpr::Aggregate {
                        func: *func,
                        arg: Some(partial(*func)),
                    },
                    AggFunc::Avg => {
                        let sum = partial(AggFunc::Sum);
                        let count = partial(AggFunc::Count);
                        SelectExpr::Ratio(
                            Box::new(SelectExpr::Aggregate {
                                func: AggFunc::Sum,
                                arg: Some(sum),
                            }),
                            Box::new(SelectExpr::Aggregate {
                                func: AggFunc::Sum,
                                arg: Some(count),
                            }),
                        )
                    }
                }
            }
            other => other.clone(),
        };
        outer_items.push(SelectItem {
            expr,
            alias: item.alias.clone(),
        });
    }
    out.projections = outer_items;

    let inner = derived_mut(&mut out, &alias);
    inner.predicates.extend(local);
    inner.projections = ir
        .group_by
        .iter()
        .map(|c| SelectItem::column(c.clone()))
        .chain(partials)
        .collect();
    inner.group_by = ir.group_by.clone();
    Some(out)
}

/// Greedy join order: start from the smallest estimated table, then
/// repeatedly add the connected table minimizing the estimated join size.
/// Ties keep source order.
pub(crate) fn greedy_join_order(ir: &QueryIR, schema: &SchemaModel) -> Vec<usize> {
    let n = ir.base_tables.len();
    let alias = |i: usize| ir.base_tables[i].alias.as_str();
    let connected = |i: usize, chosen: &[usize]| {
        ir.joins.iter().any(|j| {
            (j.left.alias == alias(i) && chosen.iter().any(|&c| j.right.alias == alias(c)))
                || (j.right.alias == alias(i) && chosen.iter().any(|&c| j.left.alias == alias(c)))
        })
    };
    let mut order: Vec<usize> = Vec::with_capacity(n);
    let mut best: Option<(usize, f64)> = None;
    for i in 0..n {
        let est = estimate_cardinality(&[alias(i)], ir, schema);
        if best.is_none_or(|(_, b)| est < b) {
            best = Some((i, est));
        }
    }
    order.push(best.expect("non-empty").0);
    while order.len() < n {
        let mut best: Option<(usize, f64)> = None;
        for i in (0..n).filter(|i| !order.contains(i)) {
            if !connected(i, &order) {
                continue;
            }
            let mut set: Vec<&str> = order.iter().map(|&c| alias(c)).collect();
            set.push(alias(i));
            let est = estimate_cardinality(&set, ir, schema);
            if best.is_none_or(|(_, b)| est < b) {
                best = Some((i, est));
            }
        }
        match best {
            Some((i, _)) => order.push(i),
            // Disconnected join graph; cannot happen for a valid IR.
            None => break,
        }
    }
    order
}

/// Rebuilds `ir` with its tables in `order`, re-assigning each join
/// condition to the table it attaches.
pub(crate) fn reorder_tables(ir: &QueryIR, order: &[usize]) -> QueryIR {
    let mut out = ir.clone();
    out.base_tables = order.iter().map(|&i| ir.base_tables[i].clone()).collect();
    let mut remaining = ir.joins.clone();
    out.joins.clear();
    for k in 1..out.base_tables.len() {
        let new_alias = out.base_tables[k].alias.clone();
        let prefix: Vec<&str> = out.base_tables[..k].iter().map(|t| t.alias.as_str()).collect();
        let pos = remaining
            .iter()
            .position(|j| {
                (j.left.alias == new_alias && prefix.contains(&j.right.alias.as_str()))
                    || (j.right.alias == new_alias && prefix.contains(&j.left.alias.as_str()))
            })
            .expect("join tree connects every prefix");
        out.joins.push(remaining.remove(pos));
    }
    out
}

pub(crate) fn try_join_reorder(ir: &QueryIR, schema: &SchemaModel) -> Option<QueryIR> {
    if ir.base_tables.len() < 2 {
        return None;
    }
    let order = greedy_join_order(ir, schema);
    if order.len() != ir.base_tables.len() || order.iter().enumerate().all(|(i, &o)| i == o) {
        return None;
    }
    Some(reorder_tables(ir, &order))
}

pub(crate) fn try_limit_pushdown(ir: &QueryIR) -> Option<QueryIR> {
    let n = ir.limit?;
    if ir.base_tables.len() != 1
        || !ir.group_by.is_empty()
        || ir.order_by.is_some()
        || ir.has_aggregates()
        || !ir.predicates.is_empty()
    {
        return None;
    }
    let alias = ir.base_tables[0].alias.clone();
    if let Some(inner) = ir.base_tables[0].derived() {
        if !inner.group_by.is_empty() || inner.limit.is_some_and(|m| m <= n) {
            return None;
        }
    }
    let mut out = ir.clone();
    derived_mut(&mut out, &alias).limit = Some(n);
    Some(out)
}

/// Index of the table with the most rows; ties go to the earliest.
pub(crate) fn largest_table(ir: &QueryIR, schema: &SchemaModel) -> Option<usize> {
    let mut best: Option<(usize, u64)> = None;
    for (i, t) in ir.base_tables.iter().enumerate() {
        let rows = schema.table(t.base_table()).map_or(0, |s| s.rows);
        if best.is_none_or(|(_, b)| rows > b) {
            best = Some((i, rows));
        }
    }
    best.map(|(i, _)| i)
}

pub(crate) fn try_sampling(ir: &QueryIR, rate: f64, schema: &SchemaModel) -> Option<QueryIR> {
    let i = largest_table(ir, schema)?;
    let alias = ir.base_tables[i].alias.clone();
    let mut out = ir.clone();
    let inner = derived_mut(&mut out, &alias);
    if inner.sample_rate == Some(rate) {
        return None;
    }
    inner.sample_rate = Some(rate);
    Some(out)
}

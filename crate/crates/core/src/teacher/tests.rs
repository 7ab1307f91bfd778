use super::*;
use crate::ir::{parse_sql, summarize_schema, ColumnRef, RawTable, SelectExpr, TableSource};

fn schema() -> SchemaModel {
    summarize_schema(vec![
        RawTable::new("big", 1_000_000, &[("id", 1_000_000), ("mid_id", 1_000), ("x", 100), ("y", 50)]),
        RawTable::new("mid", 1_000, &[("id", 1_000), ("small_id", 10), ("z", 20)]),
        RawTable::new("small", 10, &[("id", 10), ("label", 10)]),
        RawTable::new(
            "wide",
            500,
            &[
                ("c0", 500),
                ("c1", 10),
                ("c2", 10),
                ("c3", 10),
                ("c4", 10),
                ("c5", 10),
                ("c6", 10),
                ("c7", 10),
                ("c8", 10),
                ("c9", 10),
            ],
        ),
    ])
    .unwrap()
}

fn plan(sql: &str, strategies: &[Strategy]) -> PlanCandidate {
    let s = schema();
    let ir = parse_sql(sql, &s).unwrap();
    apply_plan(&ir, PlanConfig::from_strategies(strategies), &s, &TeacherConfig::default())
}

const CHAIN: &str = "SELECT a.x, c.label FROM big a JOIN mid b ON a.mid_id = b.id \
                     JOIN small c ON b.small_id = c.id WHERE a.x > 5 AND c.label = 3";

#[test]
fn all_off_is_identity() {
    let s = schema();
    let ir = parse_sql(CHAIN, &s).unwrap();
    let p = apply_plan(&ir, PlanConfig::BASELINE, &s, &TeacherConfig::default());
    assert_eq!(p.ir, ir);
    assert!(p.applied.is_empty());
}

#[test]
fn join_reorder_inapplicable_on_single_table() {
    let p = plan("SELECT a.x FROM big a", &[Strategy::JoinReorder]);
    assert!(!p.applied.contains(&Strategy::JoinReorder));
}

#[test]
fn join_reorder_puts_smallest_first() {
    let p = plan(CHAIN, &[Strategy::JoinReorder]);
    let order: Vec<&str> = p.ir.aliases().collect();
    assert_eq!(order, vec!["c", "b", "a"]);
    assert_eq!(p.applied, vec![Strategy::JoinReorder]);
    p.ir.validate(&schema()).unwrap();
}

/// Sum of estimated intermediate sizes along a join order.
fn order_cost(ir: &QueryIR, order: &[usize], s: &SchemaModel) -> f64 {
    (2..=order.len())
        .map(|k| {
            let set: Vec<&str> = order[..k].iter().map(|&i| ir.base_tables[i].alias.as_str()).collect();
            estimate_cardinality(&set, ir, s)
        })
        .sum()
}

fn connected_orders(ir: &QueryIR) -> Vec<Vec<usize>> {
    fn permute(rest: &mut Vec<usize>, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..rest.len() {
            let v = rest.remove(i);
            prefix.push(v);
            permute(rest, prefix, out);
            prefix.pop();
            rest.insert(i, v);
        }
    }
    let mut all = Vec::new();
    permute(&mut (0..ir.base_tables.len()).collect(), &mut Vec::new(), &mut all);
    all.retain(|order| {
        (1..order.len()).all(|k| {
            let new = &ir.base_tables[order[k]].alias;
            ir.joins.iter().any(|j| {
                let other = if &j.left.alias == new {
                    &j.right.alias
                } else if &j.right.alias == new {
                    &j.left.alias
                } else {
                    return false;
                };
                order[..k].iter().any(|&p| &ir.base_tables[p].alias == other)
            })
        })
    });
    all
}

#[test]
fn greedy_order_matches_exhaustive_minimum_on_chain() {
    let s = schema();
    let ir = parse_sql(CHAIN, &s).unwrap();
    let orders = connected_orders(&ir);
    assert_eq!(orders.len(), 4);
    let best = orders
        .iter()
        .map(|o| order_cost(&ir, o, &s))
        .fold(f64::INFINITY, f64::min);
    let greedy = greedy_join_order(&ir, &s);
    assert_eq!(order_cost(&ir, &greedy, &s), best);
}

#[test]
fn join_reorder_ties_keep_source_order() {
    let s = summarize_schema(vec![
        RawTable::new("p", 100, &[("k", 100)]),
        RawTable::new("q", 100, &[("k", 100)]),
    ])
    .unwrap();
    let ir = parse_sql("SELECT a.k FROM p a JOIN q b ON a.k = b.k", &s).unwrap();
    assert_eq!(greedy_join_order(&ir, &s), vec![0, 1]);
    let p = apply_plan(&ir, PlanConfig::from_strategies(&[Strategy::JoinReorder]), &s, &TeacherConfig::default());
    assert!(p.applied.is_empty());
}

#[test]
fn two_table_join_smaller_first() {
    let p = plan("SELECT a.x FROM big a JOIN mid b ON a.mid_id = b.id", &[Strategy::JoinReorder]);
    assert_eq!(p.ir.aliases().collect::<Vec<_>>(), vec!["b", "a"]);
    assert_eq!(
        crate::ir::render_sql(&p.ir),
        "SELECT a.x FROM mid AS b JOIN big AS a ON a.mid_id = b.id"
    );
}

#[test]
fn early_filter_without_predicates_is_noop() {
    let p = plan("SELECT a.x FROM big a JOIN mid b ON a.mid_id = b.id", &[Strategy::EarlyFilter]);
    assert!(p.applied.is_empty());
}

#[test]
fn early_filter_wraps_filtered_table() {
    let p = plan(
        "SELECT a.x FROM big a JOIN mid b ON a.mid_id = b.id WHERE a.x > 5",
        &[Strategy::EarlyFilter],
    );
    assert_eq!(
        p.sql(),
        "SELECT a.x FROM (SELECT * FROM big AS a WHERE a.x > 5) AS a JOIN mid AS b ON a.mid_id = b.id"
    );
}

#[test]
fn early_filter_pushes_every_predicate() {
    let p = plan(CHAIN, &[Strategy::EarlyFilter]);
    assert!(p.ir.predicates.is_empty());
    assert_eq!(p.ir.table_ref("a").unwrap().derived().unwrap().predicates.len(), 1);
    assert_eq!(p.ir.table_ref("c").unwrap().derived().unwrap().predicates.len(), 1);
    assert!(p.ir.table_ref("b").unwrap().derived().is_none());
}

#[test]
fn projection_pushdown_keeps_all_used_columns() {
    let p = plan(
        "SELECT a.id, a.mid_id, a.x, a.y FROM big a",
        &[Strategy::ProjectionPushdown],
    );
    assert!(p.applied.is_empty());
}

#[test]
fn projection_pushdown_narrows_to_referenced_columns() {
    let s = schema();
    let p = plan("SELECT w.c3 FROM wide w WHERE w.c7 = 1", &[Strategy::ProjectionPushdown]);
    let inner = p.ir.table_ref("w").unwrap().derived().unwrap();
    let referenced: Vec<String> = p
        .ir
        .column_refs()
        .into_iter()
        .map(|c| c.column.clone())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let kept = p.ir.table_ref("w").unwrap().output_columns(&s);
    assert_eq!(kept, referenced);
    assert_eq!(inner.projections.len(), 2);
}

#[test]
fn projection_and_filter_share_one_subquery() {
    let p = plan(
        "SELECT w.c3 FROM wide w WHERE w.c7 = 1",
        &[Strategy::EarlyFilter, Strategy::ProjectionPushdown],
    );
    assert_eq!(p.sql(), "SELECT w.c3 FROM (SELECT w.c3 FROM wide AS w WHERE w.c7 = 1) AS w");
}

#[test]
fn pre_aggregation_without_group_by_is_noop() {
    let p = plan(
        "SELECT SUM(a.x) FROM big a JOIN mid b ON a.mid_id = b.id",
        &[Strategy::PreAggregation],
    );
    assert!(p.applied.is_empty());
}

#[test]
fn pre_aggregation_spanning_aliases_is_noop() {
    let p = plan(
        "SELECT a.mid_id, SUM(b.z) FROM big a JOIN mid b ON a.mid_id = b.id GROUP BY a.mid_id",
        &[Strategy::PreAggregation],
    );
    assert!(p.applied.is_empty());
}

#[test]
fn pre_aggregation_pushes_sum_below_join() {
    let p = plan(
        "SELECT a.mid_id, SUM(a.x), AVG(a.y), COUNT(*) FROM big a JOIN mid b ON a.mid_id = b.id \
         WHERE a.x > 1 AND b.z = 3 GROUP BY a.mid_id",
        &[Strategy::PreAggregation],
    );
    assert_eq!(p.applied, vec![Strategy::PreAggregation]);
    assert_eq!(
        p.sql(),
        "SELECT a.mid_id, SUM(a.p0), SUM(a.p1) / SUM(a.p2), SUM(a.p3) FROM \
         (SELECT a.mid_id, SUM(a.x) AS p0, SUM(a.y) AS p1, COUNT(a.y) AS p2, COUNT(*) AS p3 \
         FROM big AS a WHERE a.x > 1 GROUP BY a.mid_id) AS a \
         JOIN mid AS b ON a.mid_id = b.id WHERE b.z = 3 GROUP BY a.mid_id"
    );
    p.ir.validate(&schema()).unwrap();
}

#[test]
fn pre_aggregation_requires_join_on_group_key() {
    let p = plan(
        "SELECT a.x, COUNT(*) FROM big a JOIN mid b ON a.mid_id = b.id GROUP BY a.x",
        &[Strategy::PreAggregation],
    );
    assert!(p.applied.is_empty());
}

#[test]
fn limit_pushdown_single_table() {
    let p = plan("SELECT a.x FROM big a LIMIT 10", &[Strategy::LimitPushdown]);
    assert_eq!(p.sql(), "SELECT a.x FROM (SELECT * FROM big AS a LIMIT 10) AS a LIMIT 10");
}

#[test]
fn limit_pushdown_safety_gates() {
    for sql in [
        "SELECT a.x FROM big a JOIN mid b ON a.mid_id = b.id LIMIT 10",
        "SELECT a.x FROM big a ORDER BY a.x LIMIT 10",
        "SELECT COUNT(*) FROM big a LIMIT 10",
        "SELECT a.x FROM big a WHERE a.x > 3 LIMIT 10",
    ] {
        let p = plan(sql, &[Strategy::LimitPushdown]);
        assert!(p.applied.is_empty(), "{sql}");
    }
    let p = plan(
        "SELECT a.x FROM big a WHERE a.x > 3 LIMIT 10",
        &[Strategy::EarlyFilter, Strategy::LimitPushdown],
    );
    assert_eq!(p.applied, vec![Strategy::EarlyFilter, Strategy::LimitPushdown]);
}

#[test]
fn sampling_targets_largest_table() {
    let p = plan(CHAIN, &[Strategy::Sampling]);
    let inner = p.ir.table_ref("a").unwrap().derived().unwrap();
    assert_eq!(inner.sample_rate, Some(DEFAULT_SAMPLE_RATE));
    assert!(p.is_approximate());
    assert!(p.sql().contains("USING SAMPLE 0.1"));
}

#[test]
fn sampling_rate_bounds() {
    let s = schema();
    let ir = parse_sql("SELECT a.x FROM big a", &s).unwrap();
    assert_eq!(rewrite_sampling(&ir, 0.0, &s), Err(TeacherError::SampleRate(0.0)));
    let full = rewrite_sampling(&ir, 1.0, &s).unwrap();
    assert_eq!(full.base_tables[0].derived().unwrap().sample_rate, Some(1.0));
    assert!(TeacherConfig::new(1.5).is_err());
}

#[test]
fn applied_is_subset_of_enabled() {
    let s = schema();
    let ir = parse_sql(CHAIN, &s).unwrap();
    for config in enumerate_configs() {
        let p = apply_plan(&ir, config, &s, &TeacherConfig::default());
        assert!(p.applied.iter().all(|st| config.is_enabled(*st)));
        p.ir.validate(&s).unwrap();
    }
}

#[test]
fn inapplicable_flag_matches_flag_off() {
    let s = schema();
    for sql in [
        CHAIN,
        "SELECT a.x FROM big a LIMIT 5",
        "SELECT a.mid_id, COUNT(*) FROM big a JOIN mid b ON a.mid_id = b.id GROUP BY a.mid_id",
        "SELECT w.c1, w.c2 FROM wide w WHERE w.c1 < 4",
    ] {
        let ir = parse_sql(sql, &s).unwrap();
        for config in enumerate_configs() {
            let p = apply_plan(&ir, config, &s, &TeacherConfig::default());
            for st in config.enabled().filter(|st| !p.applied.contains(st)) {
                let off = apply_plan(&ir, config.with(st, false), &s, &TeacherConfig::default());
                assert_eq!(off.ir, p.ir, "{sql} {config} {st}");
            }
        }
    }
}

#[test]
fn apply_plan_is_deterministic() {
    let s = schema();
    let ir = parse_sql(CHAIN, &s).unwrap();
    for config in enumerate_configs() {
        let a = apply_plan(&ir, config, &s, &TeacherConfig::default());
        let b = apply_plan(&ir, config, &s, &TeacherConfig::default());
        assert_eq!(a, b);
    }
}

#[test]
fn derived_tables_keep_outer_alias() {
    let p = plan(CHAIN, &[Strategy::EarlyFilter, Strategy::ProjectionPushdown]);
    for t in &p.ir.base_tables {
        if let TableSource::Derived(inner) = &t.source {
            assert_eq!(inner.base_tables[0].alias, t.alias);
            for item in &inner.projections {
                if let SelectExpr::Column(ColumnRef { alias, .. }) = &item.expr {
                    assert_eq!(alias, &t.alias);
                }
            }
        }
    }
}

//! Naive in-memory evaluator with exact multiset semantics. It exists to
//! check rewrites, not to be fast: joins are nested loops over the tables in
//! `base_tables` order.
//!
//! Ordering ties are broken by the projected row, and `LIMIT` without
//! `ORDER BY` keeps the first rows in scan order, so results are
//! deterministic for every query the rewrites are expected to preserve.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use super::relation::{Relation, Value};
use super::EngineError;
use crate::ir::{AggFunc, ColumnRef, QueryIR, SelectExpr, TableSource};

struct Bound {
    columns: Vec<(String, String)>,
    rows: Vec<Vec<Value>>,
}

impl Bound {
    fn position(&self, c: &ColumnRef) -> Result<usize, EngineError> {
        self.columns
            .iter()
            .position(|(a, n)| *a == c.alias && *n == c.column)
            .ok_or_else(|| EngineError::UnknownColumn(c.to_string()))
    }
}

/// Evaluates `ir` over `data`, keyed by table name.
pub fn evaluate_reference(ir: &QueryIR, data: &BTreeMap<String, Relation>) -> Result<Relation, EngineError> {
    if let Some(rate) = ir.sample_rate {
        if rate < 1.0 {
            return Err(EngineError::Unsupported("sampled query in reference evaluator".into()));
        }
    }

    let mut acc: Option<Bound> = None;
    for (i, tref) in ir.base_tables.iter().enumerate() {
        let rel = match &tref.source {
            TableSource::Base(name) => data
                .get(name)
                .cloned()
                .ok_or_else(|| EngineError::MissingTable(name.clone()))?,
            TableSource::Derived(inner) => evaluate_reference(inner, data)?,
        };
        let bound = Bound {
            columns: rel.columns.iter().map(|c| (tref.alias.clone(), c.clone())).collect(),
            rows: rel.rows,
        };
        acc = Some(match acc {
            None => bound,
            Some(left) => {
                let cond = ir
                    .joins
                    .get(i - 1)
                    .ok_or_else(|| EngineError::Unsupported("missing join condition".into()))?;
                let (outer_col, inner_col) = if cond.right.alias == tref.alias {
                    (&cond.left, &cond.right)
                } else {
                    (&cond.right, &cond.left)
                };
                let lpos = left.position(outer_col)?;
                let rpos = bound.position(inner_col)?;
                let mut rows = Vec::new();
                for l in &left.rows {
                    for r in &bound.rows {
                        if l[lpos].sql_cmp(&r[rpos])? == Some(Ordering::Equal) {
                            let mut row = l.clone();
                            row.extend(r.iter().cloned());
                            rows.push(row);
                        }
                    }
                }
                let mut columns = left.columns;
                columns.extend(bound.columns);
                Bound { columns, rows }
            }
        });
    }
    let mut input = acc.ok_or_else(|| EngineError::Unsupported("query without tables".into()))?;

    let filters = ir
        .predicates
        .iter()
        .map(|p| Ok((input.position(&p.column)?, p.op, Value::from(&p.value))))
        .collect::<Result<Vec<_>, EngineError>>()?;
    let mut kept = Vec::with_capacity(input.rows.len());
    for row in std::mem::take(&mut input.rows) {
        let mut pass = true;
        for (pos, op, lit) in &filters {
            let ord = row[*pos].sql_cmp(lit)?;
            if !ord.is_some_and(|o| compare(*op, o)) {
                pass = false;
                break;
            }
        }
        if pass {
            kept.push(row);
        }
    }
    input.rows = kept;

    let order_cols = match &ir.order_by {
        Some(o) => o.columns.iter().map(|c| input.position(c)).collect::<Result<Vec<_>, _>>()?,
        None => Vec::new(),
    };

    // (order key, output row)
    let mut out: Vec<(Vec<Value>, Vec<Value>)> = Vec::new();
    if !ir.group_by.is_empty() || ir.has_aggregates() {
        let key_cols = ir
            .group_by
            .iter()
            .map(|c| input.position(c))
            .collect::<Result<Vec<_>, _>>()?;
        let mut groups: BTreeMap<Vec<Value>, Vec<usize>> = BTreeMap::new();
        for (i, row) in input.rows.iter().enumerate() {
            groups
                .entry(key_cols.iter().map(|&k| row[k].clone()).collect())
                .or_default()
                .push(i);
        }
        if ir.group_by.is_empty() && groups.is_empty() {
            groups.insert(Vec::new(), Vec::new());
        }
        for members in groups.values() {
            let rows: Vec<&Vec<Value>> = members.iter().map(|&i| &input.rows[i]).collect();
            let mut projected = Vec::with_capacity(ir.projections.len());
            for item in &ir.projections {
                projected.push(eval_grouped(&item.expr, &input, &rows)?);
            }
            let key = order_cols.iter().map(|&c| rows[0][c].clone()).collect();
            out.push((key, projected));
        }
    } else {
        for row in &input.rows {
            let mut projected = Vec::with_capacity(ir.projections.len());
            for item in &ir.projections {
                match &item.expr {
                    SelectExpr::Column(c) => projected.push(row[input.position(c)?].clone()),
                    SelectExpr::Star => projected.extend(row.iter().cloned()),
                    _ => return Err(EngineError::Unsupported("aggregate outside grouping".into())),
                }
            }
            let key = order_cols.iter().map(|&c| row[c].clone()).collect();
            out.push((key, projected));
        }
    }

    if let Some(o) = &ir.order_by {
        out.sort_by(|(ka, ra), (kb, rb)| {
            let k = ka.cmp(kb);
            let k = if o.descending { k.reverse() } else { k };
            k.then_with(|| ra.cmp(rb))
        });
    }
    if let Some(n) = ir.limit {
        out.truncate(n as usize);
    }

    let mut columns = Vec::new();
    for item in &ir.projections {
        match (&item.expr, item.output_name()) {
            (SelectExpr::Star, _) => columns.extend(
                input
                    .columns
                    .iter()
                    .filter(|(a, _)| *a == ir.base_tables[0].alias)
                    .map(|(_, n)| n.clone()),
            ),
            (_, Some(name)) => columns.push(name),
            (expr, None) => columns.push(expr_label(expr)),
        }
    }
    Relation::new(columns, out.into_iter().map(|(_, r)| r).collect())
}

fn compare(op: crate::ir::CmpOp, ord: Ordering) -> bool {
    use crate::ir::CmpOp::*;
    match op {
        Eq => ord == Ordering::Equal,
        Ne => ord != Ordering::Equal,
        Lt => ord == Ordering::Less,
        Le => ord != Ordering::Greater,
        Gt => ord == Ordering::Greater,
        Ge => ord != Ordering::Less,
    }
}

fn expr_label(expr: &SelectExpr) -> String {
    match expr {
        SelectExpr::Column(c) => c.column.clone(),
        SelectExpr::Aggregate { func, arg: None } => format!("{}(*)", func.keyword().to_lowercase()),
        SelectExpr::Aggregate { func, arg: Some(c) } => {
            format!("{}({})", func.keyword().to_lowercase(), c.column)
        }
        SelectExpr::Star => "*".into(),
        SelectExpr::Ratio(a, b) => format!("{}/{}", expr_label(a), expr_label(b)),
    }
}

fn eval_grouped(expr: &SelectExpr, input: &Bound, rows: &[&Vec<Value>]) -> Result<Value, EngineError> {
    match expr {
        SelectExpr::Column(c) => {
            let pos = input.position(c)?;
            Ok(rows.first().map_or(Value::Null, |r| r[pos].clone()))
        }
        SelectExpr::Star => Err(EngineError::Unsupported("`*` in grouped query".into())),
        SelectExpr::Aggregate { func, arg } => {
            let values: Vec<&Value> = match arg {
                None => return Ok(Value::Int(rows.len() as i64)),
                Some(c) => {
                    let pos = input.position(c)?;
                    rows.iter().map(|r| &r[pos]).filter(|v| !matches!(v, Value::Null)).collect()
                }
            };
            aggregate(*func, &values)
        }
        SelectExpr::Ratio(num, den) => {
            let n = eval_grouped(num, input, rows)?;
            let d = eval_grouped(den, input, rows)?;
            Ok(match (n.as_f64(), d.as_f64()) {
                (Some(n), Some(d)) if d != 0.0 => Value::Float(n / d),
                _ => Value::Null,
            })
        }
    }
}

fn aggregate(func: AggFunc, values: &[&Value]) -> Result<Value, EngineError> {
    if func == AggFunc::Count {
        return Ok(Value::Int(values.len() as i64));
    }
    if values.is_empty() {
        return Ok(Value::Null);
    }
    match func {
        AggFunc::Min => Ok(values.iter().min().map(|v| (*v).clone()).unwrap()),
        AggFunc::Max => Ok(values.iter().max().map(|v| (*v).clone()).unwrap()),
        AggFunc::Sum | AggFunc::Avg => {
            let mut int_sum: Option<i64> = Some(0);
            let mut float_sum = 0.0;
            for v in values {
                match v {
                    Value::Int(i) => {
                        int_sum = int_sum.and_then(|s| s.checked_add(*i));
                        float_sum += *i as f64;
                    }
                    Value::Float(f) => {
                        int_sum = None;
                        float_sum += f;
                    }
                    other => {
                        return Err(EngineError::TypeMismatch(format!(
                            "{} over non-numeric value {other}",
                            func.keyword()
                        )))
                    }
                }
            }
            Ok(match (func, int_sum) {
                (AggFunc::Sum, Some(s)) => Value::Int(s),
                (AggFunc::Sum, None) => Value::Float(float_sum),
                (_, Some(s)) => Value::Float(s as f64 / values.len() as f64),
                (_, None) => Value::Float(float_sum / values.len() as f64),
            })
        }
        AggFunc::Count => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{parse_sql, summarize_schema, RawTable, SchemaModel};

    fn rel(cols: &[&str], rows: &[&[i64]]) -> Relation {
        Relation::new(
            cols.iter().map(|c| c.to_string()).collect(),
            rows.iter().map(|r| r.iter().map(|v| Value::Int(*v)).collect()).collect(),
        )
        .unwrap()
    }

    fn fixture() -> (SchemaModel, BTreeMap<String, Relation>) {
        let mut data = BTreeMap::new();
        data.insert("l".to_string(), rel(&["k", "v"], &[&[1, 10], &[2, 20]]));
        data.insert("r".to_string(), rel(&["k", "w"], &[&[1, 5], &[3, 6], &[2, 7]]));
        data.insert("e".to_string(), rel(&["k"], &[]));
        let schema = summarize_schema(data.iter().map(|(n, r)| RawTable {
            name: n.clone(),
            rows: r.len() as u64,
            columns: r.columns.iter().cloned().zip(r.distinct_counts()).collect(),
        }))
        .unwrap();
        (schema, data)
    }

    fn run(sql: &str) -> Relation {
        let (s, d) = fixture();
        evaluate_reference(&parse_sql(sql, &s).unwrap(), &d).unwrap()
    }

    #[test]
    fn count_over_empty_table() {
        let r = run("SELECT COUNT(*) FROM e a");
        assert_eq!(r.rows, vec![vec![Value::Int(0)]]);
    }

    #[test]
    fn equi_join_hand_enumerated() {
        // (1,10)-(1,5) and (2,20)-(2,7) match; (3,6) has no partner.
        let r = run("SELECT a.v, b.w FROM l a JOIN r b ON a.k = b.k");
        let expected = rel(&["v", "w"], &[&[10, 5], &[20, 7]]);
        assert!(super::super::multiset_eq(&r, &expected, 0.0));
    }

    #[test]
    fn limit_zero_is_empty() {
        assert!(run("SELECT a.v FROM l a LIMIT 0").is_empty());
    }

    #[test]
    fn group_order_limit() {
        let r = run("SELECT b.k, SUM(b.w) FROM r b GROUP BY b.k ORDER BY b.k DESC LIMIT 2");
        assert_eq!(r.rows, vec![vec![Value::Int(3), Value::Int(6)], vec![Value::Int(2), Value::Int(7)]]);
    }

    #[test]
    fn avg_min_max() {
        let r = run("SELECT AVG(b.w), MIN(b.w), MAX(b.w) FROM r b WHERE b.w >= 6");
        assert_eq!(r.rows, vec![vec![Value::Float(6.5), Value::Int(6), Value::Int(7)]]);
    }

    #[test]
    fn missing_table_error() {
        let (s, mut d) = fixture();
        let ir = parse_sql("SELECT a.v FROM l a", &s).unwrap();
        d.remove("l");
        assert_eq!(evaluate_reference(&ir, &d), Err(EngineError::MissingTable("l".into())));
    }

    #[test]
    fn type_mismatch_error() {
        let (s, mut d) = fixture();
        d.insert(
            "l".into(),
            Relation::new(
                vec!["k".into(), "v".into()],
                vec![vec![Value::Str("x".into()), Value::Int(1)]],
            )
            .unwrap(),
        );
        let ir = parse_sql("SELECT a.v FROM l a WHERE a.k > 3", &s).unwrap();
        assert!(matches!(evaluate_reference(&ir, &d), Err(EngineError::TypeMismatch(_))));
    }

    #[test]
    fn sampled_query_rejected() {
        let (s, d) = fixture();
        let mut ir = parse_sql("SELECT a.v FROM l a", &s).unwrap();
        ir.sample_rate = Some(0.5);
        assert!(matches!(evaluate_reference(&ir, &d), Err(EngineError::Unsupported(_))));
        ir.sample_rate = Some(1.0);
        assert_eq!(evaluate_reference(&ir, &d).unwrap().len(), 2);
    }
}

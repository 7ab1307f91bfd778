use std::fmt::Write;

use super::*;

/// Renders `ir` in canonical form: projections as listed, joins in IR order,
/// predicates AND-joined in IR order, explicit `AS` on every alias. Derived
/// tables render as parenthesized subqueries.
pub fn render_sql(ir: &QueryIR) -> String {
    let mut out = String::new();
    write_query(&mut out, ir);
    out
}

fn write_query(out: &mut String, ir: &QueryIR) {
    out.push_str("SELECT ");
    for (i, item) in ir.projections.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(out, &item.expr);
        if let Some(a) = &item.alias {
            let _ = write!(out, " AS {a}");
        }
    }
    out.push_str(" FROM ");
    for (i, t) in ir.base_tables.iter().enumerate() {
        if i > 0 {
            out.push_str(" JOIN ");
        }
        match &t.source {
            TableSource::Base(name) => out.push_str(name),
            TableSource::Derived(inner) => {
                out.push('(');
                write_query(out, inner);
                out.push(')');
            }
        }
        let _ = write!(out, " AS {}", t.alias);
        if i > 0 {
            if let Some(j) = ir.joins.get(i - 1) {
                let _ = write!(out, " ON {} = {}", j.left, j.right);
            }
        }
    }
    if let Some(rate) = ir.sample_rate {
        let _ = write!(out, " USING SAMPLE {}", format_decimal(rate));
    }
    if !ir.predicates.is_empty() {
        out.push_str(" WHERE ");
        for (i, p) in ir.predicates.iter().enumerate() {
            if i > 0 {
                out.push_str(" AND ");
            }
            let _ = write!(out, "{} {} ", p.column, p.op.symbol());
            write_literal(out, &p.value);
        }
    }
    if !ir.group_by.is_empty() {
        out.push_str(" GROUP BY ");
        write_columns(out, &ir.group_by);
    }
    if let Some(o) = &ir.order_by {
        out.push_str(" ORDER BY ");
        write_columns(out, &o.columns);
        if o.descending {
            out.push_str(" DESC");
        }
    }
    if let Some(n) = ir.limit {
        let _ = write!(out, " LIMIT {n}");
    }
}

fn write_columns(out: &mut String, cols: &[ColumnRef]) {
    for (i, c) in cols.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{c}");
    }
}

fn write_expr(out: &mut String, expr: &SelectExpr) {
    match expr {
        SelectExpr::Column(c) => {
            let _ = write!(out, "{c}");
        }
        SelectExpr::Aggregate { func, arg } => {
            let _ = match arg {
                Some(c) => write!(out, "{}({c})", func.keyword()),
                None => write!(out, "{}(*)", func.keyword()),
            };
        }
        SelectExpr::Star => out.push('*'),
        SelectExpr::Ratio(num, den) => {
            write_expr(out, num);
            out.push_str(" / ");
            write_expr(out, den);
        }
    }
}

fn write_literal(out: &mut String, lit: &Literal) {
    match lit {
        Literal::Int(i) => {
            let _ = write!(out, "{i}");
        }
        Literal::Decimal(d) => out.push_str(&format_decimal(*d)),
        Literal::Str(s) => {
            let _ = write!(out, "'{}'", s.replace('\'', "''"));
        }
    }
}

/// Shortest round-tripping representation that still lexes as a decimal.
fn format_decimal(d: f64) -> String {
    let s = format!("{d}");
    if s.contains('.') || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> SchemaModel {
        summarize_schema(vec![
            RawTable::new("t", 1000, &[("x", 100), ("y", 10), ("k", 1000), ("s", 5)]),
            RawTable::new("u", 100, &[("k", 100), ("z", 7)]),
            RawTable::new("w", 50, &[("z", 7), ("v", 50)]),
        ])
        .unwrap()
    }

    #[test]
    fn canonical_minimal() {
        let ir = parse_sql("SELECT a.x FROM t a", &schema()).unwrap();
        assert_eq!(render_sql(&ir), "SELECT a.x FROM t AS a");
    }

    #[test]
    fn sample_clause_rendered() {
        let mut ir = parse_sql("SELECT a.x FROM t a", &schema()).unwrap();
        ir.sample_rate = Some(0.1);
        assert_eq!(render_sql(&ir), "SELECT a.x FROM t AS a USING SAMPLE 0.1");
    }

    #[test]
    fn decimals_keep_their_point() {
        let ir = parse_sql("SELECT a.x FROM t a WHERE a.x > 5.0 AND a.s = 'o''k'", &schema()).unwrap();
        let sql = render_sql(&ir);
        assert_eq!(sql, "SELECT a.x FROM t AS a WHERE a.x > 5.0 AND a.s = 'o''k'");
        assert_eq!(parse_sql(&sql, &schema()).unwrap(), ir);
    }

    #[test]
    fn derived_tables_render_as_subqueries() {
        let s = schema();
        let mut ir = parse_sql("SELECT a.x FROM t a JOIN u b ON a.k = b.k", &s).unwrap();
        let mut inner = QueryIR::scan("t", "a");
        inner.predicates.push(Predicate::new(ColumnRef::new("a", "x"), CmpOp::Gt, Literal::Int(5)));
        ir.base_tables[0].source = TableSource::Derived(Box::new(inner));
        assert_eq!(
            render_sql(&ir),
            "SELECT a.x FROM (SELECT * FROM t AS a WHERE a.x > 5) AS a JOIN u AS b ON a.k = b.k"
        );
    }

    #[test]
    fn corpus_round_trips() {
        let s = schema();
        for sql in [
            "SELECT a.x, a.y FROM t a WHERE a.x >= 1 AND a.y <> 2",
            "SELECT a.y, SUM(a.x), COUNT(*) FROM t a JOIN u b ON b.k = a.k GROUP BY a.y ORDER BY a.y DESC LIMIT 3",
            "SELECT c.v FROM t a JOIN u b ON a.k = b.k JOIN w c ON c.z = b.z WHERE c.v < 2.5",
            "SELECT MIN(a.x) AS lo, MAX(a.x) AS hi FROM t a",
        ] {
            let ir = parse_sql(sql, &s).unwrap();
            let again = parse_sql(&render_sql(&ir), &s).unwrap();
            assert_eq!(ir, again, "{sql}");
        }
    }
}

//! Recursive-descent parser for the supported SQL subset.
//!
//! ```text
//! query     := SELECT items FROM table_ref (JOIN table_ref ON col '=' col)*
//!              (USING SAMPLE number)?
//!              (WHERE pred (AND pred)*)? (GROUP BY cols)?
//!              (ORDER BY cols (ASC|DESC)?)? (LIMIT int)?
//! items     := item (',' item)*
//! item      := (col | agg '(' (col | '*') ')') (AS name)?
//! pred      := col op literal
//! table_ref := name (AS)? alias
//! col       := alias '.' name
//! ```
//!
//! Keywords are case-insensitive; identifiers are folded to lower case.

use super::lexer::{tokenize, Spanned, Token};
use super::*;

const RESERVED: &[&str] = &[
    "select", "from", "join", "inner", "on", "where", "and", "group", "by", "order", "asc", "desc",
    "limit", "as", "using", "sample",
];

const UNSUPPORTED: &[(&str, &str)] = &[
    ("or", "OR"),
    ("not", "NOT"),
    ("left", "outer join"),
    ("right", "outer join"),
    ("full", "outer join"),
    ("outer", "outer join"),
    ("cross", "cross join"),
    ("like", "LIKE"),
    ("in", "IN"),
    ("between", "BETWEEN"),
    ("is", "IS NULL"),
    ("having", "HAVING"),
    ("distinct", "DISTINCT"),
    ("union", "UNION"),
    ("offset", "OFFSET"),
    ("null", "NULL"),
];

/// Parses `text` and validates it against `schema`.
pub fn parse_sql(text: &str, schema: &SchemaModel) -> Result<QueryIR, IrError> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, pos: 0 };
    let ir = p.query()?;
    p.expect_eof()?;
    ir.validate(schema)?;
    Ok(ir)
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos].token
    }

    fn peek_at(&self, offset: usize) -> &Token {
        let i = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[i].token
    }

    fn here(&self) -> usize {
        self.tokens[self.pos].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].token.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> IrError {
        if let Token::Ident(word) = self.peek() {
            let lower = word.to_ascii_lowercase();
            if let Some((_, name)) = UNSUPPORTED.iter().find(|(k, _)| *k == lower) {
                return IrError::Unsupported((*name).to_string());
            }
        }
        IrError::Syntax {
            position: self.here(),
            expected: expected.to_string(),
            found: self.peek().describe(),
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Token::Ident(w) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), IrError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.error(kw))
        }
    }

    fn expect(&mut self, t: Token, what: &str) -> Result<(), IrError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(self.error(what))
        }
    }

    fn expect_eof(&self) -> Result<(), IrError> {
        if *self.peek() == Token::Eof {
            Ok(())
        } else {
            Err(self.error("end of query"))
        }
    }

    fn identifier(&mut self, what: &str) -> Result<String, IrError> {
        match self.peek() {
            Token::Ident(w) if !RESERVED.contains(&w.to_ascii_lowercase().as_str()) => {
                let w = w.to_ascii_lowercase();
                if UNSUPPORTED.iter().any(|(k, _)| *k == w) {
                    return Err(self.error(what));
                }
                self.bump();
                Ok(w)
            }
            _ => Err(self.error(what)),
        }
    }

    fn query(&mut self) -> Result<QueryIR, IrError> {
        self.expect_keyword("select")?;
        let mut projections = vec![self.item()?];
        while *self.peek() == Token::Comma {
            self.bump();
            projections.push(self.item()?);
        }

        self.expect_keyword("from")?;
        let mut base_tables = vec![self.table_ref()?];
        let mut joins = Vec::new();
        loop {
            let inner = self.is_keyword("inner");
            if inner {
                self.bump();
            }
            if !self.eat_keyword("join") {
                if inner {
                    return Err(self.error("JOIN"));
                }
                break;
            }
            base_tables.push(self.table_ref()?);
            self.expect_keyword("on")?;
            let left = self.column()?;
            self.expect(Token::Eq, "`=` in join condition")?;
            let right = self.column()?;
            joins.push(JoinCondition { left, right });
        }

        let mut sample_rate = None;
        if self.eat_keyword("using") {
            self.expect_keyword("sample")?;
            sample_rate = Some(match self.bump() {
                Token::Int(i) => i as f64,
                Token::Decimal(d) => d,
                _ => {
                    self.pos -= 1;
                    return Err(self.error("sample rate"));
                }
            });
        }

        let mut predicates = Vec::new();
        if self.eat_keyword("where") {
            predicates.push(self.predicate()?);
            while self.eat_keyword("and") {
                predicates.push(self.predicate()?);
            }
        }

        let mut group_by = Vec::new();
        if self.eat_keyword("group") {
            self.expect_keyword("by")?;
            group_by = self.column_list()?;
        }

        let mut order_by = None;
        if self.eat_keyword("order") {
            self.expect_keyword("by")?;
            let columns = self.column_list()?;
            let descending = if self.eat_keyword("desc") {
                true
            } else {
                self.eat_keyword("asc");
                false
            };
            order_by = Some(OrderBy { columns, descending });
        }

        let mut limit = None;
        if self.eat_keyword("limit") {
            match self.peek().clone() {
                Token::Int(n) if n >= 0 => {
                    self.bump();
                    limit = Some(n as u64);
                }
                _ => return Err(self.error("non-negative integer")),
            }
        }

        Ok(QueryIR {
            projections,
            base_tables,
            joins,
            predicates,
            group_by,
            order_by,
            limit,
            sample_rate,
        })
    }

    fn item(&mut self) -> Result<SelectItem, IrError> {
        let expr = match (self.peek().clone(), self.peek_at(1).clone()) {
            (Token::Star, _) => return Err(IrError::Unsupported("`*` projection".into())),
            (Token::Ident(w), Token::LParen) => {
                let func = AggFunc::from_keyword(&w)
                    .ok_or_else(|| IrError::Unsupported(format!("function `{w}`")))?;
                self.bump();
                self.bump();
                let arg = if *self.peek() == Token::Star {
                    if func != AggFunc::Count {
                        return Err(self.error("column"));
                    }
                    self.bump();
                    None
                } else {
                    Some(self.column()?)
                };
                self.expect(Token::RParen, "`)`")?;
                SelectExpr::Aggregate { func, arg }
            }
            _ => SelectExpr::Column(self.column()?),
        };
        let alias = if self.eat_keyword("as") {
            Some(self.identifier("output name")?)
        } else {
            None
        };
        Ok(SelectItem { expr, alias })
    }

    fn table_ref(&mut self) -> Result<TableRef, IrError> {
        if *self.peek() == Token::LParen {
            return Err(IrError::Unsupported("subquery".into()));
        }
        let table = self.identifier("table name")?;
        self.eat_keyword("as");
        let alias = self.identifier("table alias")?;
        Ok(TableRef::base(table, alias))
    }

    fn column(&mut self) -> Result<ColumnRef, IrError> {
        let alias = self.identifier("column reference `alias.column`")?;
        self.expect(Token::Dot, "`.` in qualified column")?;
        let column = self.identifier("column name")?;
        Ok(ColumnRef { alias, column })
    }

    fn column_list(&mut self) -> Result<Vec<ColumnRef>, IrError> {
        let mut cols = vec![self.column()?];
        while *self.peek() == Token::Comma {
            self.bump();
            cols.push(self.column()?);
        }
        Ok(cols)
    }

    fn predicate(&mut self) -> Result<Predicate, IrError> {
        let column = self.column()?;
        let op = match self.peek() {
            Token::Eq => CmpOp::Eq,
            Token::Lt => CmpOp::Lt,
            Token::Gt => CmpOp::Gt,
            Token::Le => CmpOp::Le,
            Token::Ge => CmpOp::Ge,
            Token::Ne => CmpOp::Ne,
            _ => return Err(self.error("comparison operator")),
        };
        self.bump();
        let value = self.literal()?;
        Ok(Predicate { column, op, value })
    }

    fn literal(&mut self) -> Result<Literal, IrError> {
        let negative = *self.peek() == Token::Minus;
        if negative {
            self.bump();
        }
        let lit = match self.peek().clone() {
            Token::Int(i) => Literal::Int(if negative { -i } else { i }),
            Token::Decimal(d) => Literal::Decimal(if negative { -d } else { d }),
            Token::Str(s) if !negative => Literal::Str(s),
            Token::Ident(_) => {
                return Err(match self.error("literal") {
                    IrError::Unsupported(u) => IrError::Unsupported(u),
                    _ => IrError::Unsupported("column-to-column comparison".into()),
                })
            }
            _ => return Err(self.error("literal")),
        };
        self.bump();
        Ok(lit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> SchemaModel {
        summarize_schema(vec![
            RawTable::new("t", 1000, &[("x", 100), ("y", 10), ("k", 1000)]),
            RawTable::new("u", 100, &[("k", 100), ("name", 100)]),
        ])
        .unwrap()
    }

    #[test]
    fn minimal_query() {
        let ir = parse_sql("SELECT a.x FROM t a", &schema()).unwrap();
        assert_eq!(ir.base_tables, vec![TableRef::base("t", "a")]);
        assert_eq!(ir.projections, vec![SelectItem::column(ColumnRef::new("a", "x"))]);
        assert!(ir.joins.is_empty());
    }

    #[test]
    fn join_filter_limit_field_by_field() {
        let ir = parse_sql(
            "SELECT a.x FROM t a JOIN u b ON a.k = b.k WHERE a.x > 5 LIMIT 10",
            &schema(),
        )
        .unwrap();
        let expected = QueryIR {
            projections: vec![SelectItem::column(ColumnRef::new("a", "x"))],
            base_tables: vec![TableRef::base("t", "a"), TableRef::base("u", "b")],
            joins: vec![JoinCondition::new(ColumnRef::new("a", "k"), ColumnRef::new("b", "k"))],
            predicates: vec![Predicate::new(ColumnRef::new("a", "x"), CmpOp::Gt, Literal::Int(5))],
            group_by: vec![],
            order_by: None,
            limit: Some(10),
            sample_rate: None,
        };
        assert_eq!(ir, expected);
        let m = ir.complexity();
        assert_eq!((m.join_count, m.predicate_count), (1, 1));
    }

    #[test]
    fn predicate_without_comparison_is_syntax_error() {
        let err = parse_sql("SELECT a.x FROM t a WHERE a.y", &schema()).unwrap_err();
        match err {
            IrError::Syntax { expected, position, .. } => {
                assert_eq!(expected, "comparison operator");
                assert_eq!(position, 29);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_column_is_named() {
        let err = parse_sql("SELECT a.nope FROM t a", &schema()).unwrap_err();
        assert_eq!(
            err,
            IrError::UnknownColumn {
                alias: "a".into(),
                column: "nope".into()
            }
        );
    }

    #[test]
    fn unknown_table_is_named() {
        let err = parse_sql("SELECT a.x FROM nope a", &schema()).unwrap_err();
        assert_eq!(err, IrError::UnknownTable("nope".into()));
    }

    #[test]
    fn unsupported_constructs_are_named() {
        let s = schema();
        let cases = [
            ("SELECT a.x FROM t a WHERE a.x > 1 OR a.x < 0", "OR"),
            ("SELECT a.x FROM t a LEFT JOIN u b ON a.k = b.k", "outer join"),
            ("SELECT a.x FROM (SELECT b.x FROM t b) a", "subquery"),
            ("SELECT * FROM t a", "`*` projection"),
            ("SELECT a.x FROM t a WHERE a.x = a.y", "column-to-column comparison"),
            ("SELECT a.x FROM t a WHERE a.name LIKE 'x%'", "LIKE"),
        ];
        for (sql, construct) in cases {
            match parse_sql(sql, &s) {
                Err(IrError::Unsupported(c)) => assert_eq!(c, construct, "{sql}"),
                other => panic!("{sql}: {other:?}"),
            }
        }
    }

    #[test]
    fn keywords_are_case_insensitive() {
        let s = schema();
        let a = parse_sql("select A.X from T as A where A.x >= -3 order by a.x desc limit 2", &s).unwrap();
        let b = parse_sql("SELECT a.x FROM t a WHERE a.x >= -3 ORDER BY a.x DESC LIMIT 2", &s).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.predicates[0].value, Literal::Int(-3));
    }

    #[test]
    fn aggregates_and_grouping() {
        let ir = parse_sql(
            "SELECT a.y, COUNT(*), AVG(a.x) FROM t a GROUP BY a.y ORDER BY a.y",
            &schema(),
        )
        .unwrap();
        assert_eq!(ir.projections[1], SelectItem::aggregate(AggFunc::Count, None));
        assert_eq!(
            ir.projections[2],
            SelectItem::aggregate(AggFunc::Avg, Some(ColumnRef::new("a", "x")))
        );
    }

    #[test]
    fn non_grouped_projection_rejected() {
        let err = parse_sql("SELECT a.x, COUNT(*) FROM t a GROUP BY a.y", &schema()).unwrap_err();
        assert!(matches!(err, IrError::Grouping(_)));
    }

    #[test]
    fn join_must_attach_new_table() {
        let err = parse_sql("SELECT a.x FROM t a JOIN u b ON a.k = a.x", &schema()).unwrap_err();
        assert!(matches!(err, IrError::InvalidJoin(_)));
    }

    #[test]
    fn sample_clause() {
        let ir = parse_sql("SELECT a.x FROM t AS a USING SAMPLE 0.1", &schema()).unwrap();
        assert_eq!(ir.sample_rate, Some(0.1));
    }
}

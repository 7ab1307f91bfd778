//! Relational form of the supported SQL subset.
//!
//! A [`QueryIR`] is a left-deep join of table references with conjunctive
//! `column op literal` filters, optional grouping, ordering and a limit.
//! Parsed queries only reference base tables; the teacher's rewrites wrap
//! base tables in single-table derived subqueries, which are themselves
//! `QueryIR` values.

mod lexer;
mod parser;
mod render;
pub mod schema;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parser::parse_sql;
pub use render::render_sql;
pub use schema::{summarize_schema, ColumnStat, RawTable, SchemaModel, TableStat};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IrError {
    #[error("syntax error at byte {position}: expected {expected}, found {found}")]
    Syntax {
        position: usize,
        expected: String,
        found: String,
    },
    #[error("unknown table `{0}`")]
    UnknownTable(String),
    #[error("unknown alias `{0}`")]
    UnknownAlias(String),
    #[error("unknown column `{alias}.{column}`")]
    UnknownColumn { alias: String, column: String },
    #[error("duplicate alias `{0}`")]
    DuplicateAlias(String),
    #[error("duplicate table `{0}`")]
    DuplicateTable(String),
    #[error("duplicate column `{column}` in table `{table}`")]
    DuplicateColumn { table: String, column: String },
    #[error("empty identifier")]
    EmptyName,
    #[error("unsupported construct: {0}")]
    Unsupported(String),
    #[error("invalid join: {0}")]
    InvalidJoin(String),
    #[error("grouping violation: {0}")]
    Grouping(String),
    #[error("sample rate {0} outside (0, 1]")]
    SampleRate(f64),
    #[error("schema file: {0}")]
    SchemaFile(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ColumnRef {
    pub alias: String,
    pub column: String,
}

impl ColumnRef {
    pub fn new(alias: impl Into<String>, column: impl Into<String>) -> Self {
        Self {
            alias: alias.into(),
            column: column.into(),
        }
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.alias, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AggFunc {
    Count,
    Sum,
    Avg,
    Min,
    Max,
}

impl AggFunc {
    pub fn keyword(self) -> &'static str {
        match self {
            AggFunc::Count => "COUNT",
            AggFunc::Sum => "SUM",
            AggFunc::Avg => "AVG",
            AggFunc::Min => "MIN",
            AggFunc::Max => "MAX",
        }
    }

    pub(crate) fn from_keyword(word: &str) -> Option<Self> {
        match word.to_ascii_uppercase().as_str() {
            "COUNT" => Some(AggFunc::Count),
            "SUM" => Some(AggFunc::Sum),
            "AVG" => Some(AggFunc::Avg),
            "MIN" => Some(AggFunc::Min),
            "MAX" => Some(AggFunc::Max),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SelectExpr {
    Column(ColumnRef),
    /// `arg == None` is `COUNT(*)`.
    Aggregate {
        func: AggFunc,
        arg: Option<ColumnRef>,
    },
    /// All columns of the single input table; only produced inside derived tables.
    Star,
    /// Quotient of two aggregate expressions, used to recombine partial averages.
    Ratio(Box<SelectExpr>, Box<SelectExpr>),
}

impl SelectExpr {
    pub fn is_aggregate(&self) -> bool {
        match self {
            SelectExpr::Aggregate { .. } => true,
            SelectExpr::Ratio(a, b) => a.is_aggregate() || b.is_aggregate(),
            SelectExpr::Column(_) | SelectExpr::Star => false,
        }
    }

    fn for_each_column<'a>(&'a self, f: &mut impl FnMut(&'a ColumnRef)) {
        match self {
            SelectExpr::Column(c) => f(c),
            SelectExpr::Aggregate { arg: Some(c), .. } => f(c),
            SelectExpr::Aggregate { arg: None, .. } | SelectExpr::Star => {}
            SelectExpr::Ratio(a, b) => {
                a.for_each_column(f);
                b.for_each_column(f);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectItem {
    pub expr: SelectExpr,
    pub alias: Option<String>,
}

impl SelectItem {
    pub fn column(c: ColumnRef) -> Self {
        Self {
            expr: SelectExpr::Column(c),
            alias: None,
        }
    }

    pub fn aggregate(func: AggFunc, arg: Option<ColumnRef>) -> Self {
        Self {
            expr: SelectExpr::Aggregate { func, arg },
            alias: None,
        }
    }

    pub fn named(mut self, alias: impl Into<String>) -> Self {
        self.alias = Some(alias.into());
        self
    }

    /// Name under which this item is visible to an enclosing query.
    pub fn output_name(&self) -> Option<String> {
        if let Some(a) = &self.alias {
            return Some(a.clone());
        }
        match &self.expr {
            SelectExpr::Column(c) => Some(c.column.clone()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Lt,
    Gt,
    Le,
    Ge,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
            CmpOp::Ne => "<>",
        }
    }

    pub fn is_range(self) -> bool {
        matches!(self, CmpOp::Lt | CmpOp::Gt | CmpOp::Le | CmpOp::Ge)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Literal {
    Int(i64),
    Decimal(f64),
    Str(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub column: ColumnRef,
    pub op: CmpOp,
    pub value: Literal,
}

impl Predicate {
    pub fn new(column: ColumnRef, op: CmpOp, value: Literal) -> Self {
        Self { column, op, value }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TableSource {
    Base(String),
    Derived(Box<QueryIR>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRef {
    pub source: TableSource,
    pub alias: String,
}

impl TableRef {
    pub fn base(table: impl Into<String>, alias: impl Into<String>) -> Self {
        Self {
            source: TableSource::Base(table.into()),
            alias: alias.into(),
        }
    }

    /// Name of the stored table underneath this reference.
    pub fn base_table(&self) -> &str {
        match &self.source {
            TableSource::Base(name) => name,
            TableSource::Derived(inner) => inner.base_tables[0].base_table(),
        }
    }

    pub fn derived(&self) -> Option<&QueryIR> {
        match &self.source {
            TableSource::Derived(inner) => Some(inner),
            TableSource::Base(_) => None,
        }
    }

    /// Columns this reference exposes to the enclosing query.
    pub fn output_columns(&self, schema: &SchemaModel) -> Vec<String> {
        match &self.source {
            TableSource::Base(name) => schema
                .table(name)
                .map(|t| t.column_names().map(str::to_string).collect())
                .unwrap_or_default(),
            TableSource::Derived(inner) => {
                let mut out = Vec::new();
                for item in &inner.projections {
                    if item.expr == SelectExpr::Star {
                        out.extend(inner.base_tables[0].output_columns(schema));
                    } else if let Some(name) = item.output_name() {
                        out.push(name);
                    }
                }
                out
            }
        }
    }
}

/// Equality join attaching `base_tables[i + 1]` to an earlier table.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JoinCondition {
    pub left: ColumnRef,
    pub right: ColumnRef,
}

impl JoinCondition {
    pub fn new(left: ColumnRef, right: ColumnRef) -> Self {
        Self { left, right }
    }

    pub fn touches(&self, alias: &str) -> bool {
        self.left.alias == alias || self.right.alias == alias
    }

    /// The side of the condition belonging to `alias`.
    pub fn side(&self, alias: &str) -> Option<&ColumnRef> {
        if self.left.alias == alias {
            Some(&self.left)
        } else if self.right.alias == alias {
            Some(&self.right)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderBy {
    pub columns: Vec<ColumnRef>,
    pub descending: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryIR {
    pub projections: Vec<SelectItem>,
    pub base_tables: Vec<TableRef>,
    pub joins: Vec<JoinCondition>,
    pub predicates: Vec<Predicate>,
    pub group_by: Vec<ColumnRef>,
    pub order_by: Option<OrderBy>,
    pub limit: Option<u64>,
    pub sample_rate: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityMetrics {
    pub table_count: usize,
    pub join_count: usize,
    pub predicate_count: usize,
}

impl QueryIR {
    /// `SELECT * FROM table AS alias`, the seed for a derived table.
    pub fn scan(table: impl Into<String>, alias: impl Into<String>) -> Self {
        Self {
            projections: vec![SelectItem {
                expr: SelectExpr::Star,
                alias: None,
            }],
            base_tables: vec![TableRef::base(table, alias)],
            joins: Vec::new(),
            predicates: Vec::new(),
            group_by: Vec::new(),
            order_by: None,
            limit: None,
            sample_rate: None,
        }
    }

    pub fn table_ref(&self, alias: &str) -> Option<&TableRef> {
        self.base_tables.iter().find(|t| t.alias == alias)
    }

    pub fn table_ref_mut(&mut self, alias: &str) -> Option<&mut TableRef> {
        self.base_tables.iter_mut().find(|t| t.alias == alias)
    }

    pub fn aliases(&self) -> impl Iterator<Item = &str> {
        self.base_tables.iter().map(|t| t.alias.as_str())
    }

    pub fn has_aggregates(&self) -> bool {
        self.projections.iter().any(|p| p.expr.is_aggregate())
    }

    /// Every column reference made by this query level (not descending into
    /// derived tables).
    pub fn column_refs(&self) -> Vec<&ColumnRef> {
        let mut out = Vec::new();
        for p in &self.projections {
            p.expr.for_each_column(&mut |c| out.push(c));
        }
        for j in &self.joins {
            out.push(&j.left);
            out.push(&j.right);
        }
        out.extend(self.predicates.iter().map(|p| &p.column));
        out.extend(self.group_by.iter());
        if let Some(o) = &self.order_by {
            out.extend(o.columns.iter());
        }
        out
    }

    /// Predicates applying to `alias`, including those already pushed into
    /// its derived table.
    pub fn predicates_on<'a>(&'a self, alias: &'a str) -> impl Iterator<Item = &'a Predicate> + 'a {
        let pushed = self
            .table_ref(alias)
            .and_then(TableRef::derived)
            .map(|inner| inner.predicates.as_slice())
            .unwrap_or(&[]);
        pushed
            .iter()
            .chain(self.predicates.iter().filter(move |p| p.column.alias == alias))
    }

    pub fn complexity(&self) -> ComplexityMetrics {
        complexity(self)
    }

    /// Checks every structural invariant against `schema`.
    pub fn validate(&self, schema: &SchemaModel) -> Result<(), IrError> {
        if self.base_tables.is_empty() {
            return Err(IrError::Unsupported("query without FROM".into()));
        }
        for (i, t) in self.base_tables.iter().enumerate() {
            if self.base_tables[..i].iter().any(|o| o.alias == t.alias) {
                return Err(IrError::DuplicateAlias(t.alias.clone()));
            }
            match &t.source {
                TableSource::Base(name) => {
                    if schema.table(name).is_none() {
                        return Err(IrError::UnknownTable(name.clone()));
                    }
                }
                TableSource::Derived(inner) => {
                    if inner.base_tables.len() != 1 || !inner.joins.is_empty() {
                        return Err(IrError::Unsupported(
                            "derived table over more than one table".into(),
                        ));
                    }
                    if inner.base_tables[0].derived().is_some() {
                        return Err(IrError::Unsupported("nested derived tables".into()));
                    }
                    inner.validate(schema)?;
                }
            }
        }

        let columns: Vec<(&str, Vec<String>)> = self
            .base_tables
            .iter()
            .map(|t| (t.alias.as_str(), t.output_columns(schema)))
            .collect();
        for c in self.column_refs() {
            let cols = columns
                .iter()
                .find(|(a, _)| *a == c.alias)
                .map(|(_, cols)| cols)
                .ok_or_else(|| IrError::UnknownAlias(c.alias.clone()))?;
            if !cols.contains(&c.column) {
                return Err(IrError::UnknownColumn {
                    alias: c.alias.clone(),
                    column: c.column.clone(),
                });
            }
        }

        if self.joins.len() + 1 != self.base_tables.len() {
            return Err(IrError::InvalidJoin(format!(
                "{} tables need {} join conditions, found {}",
                self.base_tables.len(),
                self.base_tables.len() - 1,
                self.joins.len()
            )));
        }
        for (i, j) in self.joins.iter().enumerate() {
            let new_alias = &self.base_tables[i + 1].alias;
            let earlier = &self.base_tables[..=i];
            let ok = (j.left.alias == *new_alias && earlier.iter().any(|t| t.alias == j.right.alias))
                || (j.right.alias == *new_alias && earlier.iter().any(|t| t.alias == j.left.alias));
            if !ok {
                return Err(IrError::InvalidJoin(format!(
                    "`{} = {}` must connect `{}` to an earlier table",
                    j.left, j.right, new_alias
                )));
            }
        }

        if self.group_by.is_empty() {
            if self.has_aggregates()
                && self
                    .projections
                    .iter()
                    .any(|p| matches!(p.expr, SelectExpr::Column(_) | SelectExpr::Star))
            {
                return Err(IrError::Grouping(
                    "plain columns mixed with aggregates require GROUP BY".into(),
                ));
            }
        } else {
            for p in &self.projections {
                match &p.expr {
                    SelectExpr::Column(c) if !self.group_by.contains(c) => {
                        return Err(IrError::Grouping(format!("`{c}` is not a grouping column")));
                    }
                    SelectExpr::Star => {
                        return Err(IrError::Grouping("`*` with GROUP BY".into()));
                    }
                    _ => {}
                }
            }
            if let Some(o) = &self.order_by {
                if let Some(c) = o.columns.iter().find(|c| !self.group_by.contains(c)) {
                    return Err(IrError::Grouping(format!(
                        "ORDER BY `{c}` is not a grouping column"
                    )));
                }
            }
        }
        if self.has_aggregates() && self.group_by.is_empty() {
            if let Some(o) = &self.order_by {
                if !o.columns.is_empty() {
                    return Err(IrError::Grouping("ORDER BY over a global aggregate".into()));
                }
            }
        }

        if let Some(rate) = self.sample_rate {
            if !(rate > 0.0 && rate <= 1.0) {
                return Err(IrError::SampleRate(rate));
            }
        }
        Ok(())
    }
}

/// Table, join and predicate counts. Predicates already pushed into derived
/// tables still count, so the metrics are stable under rewriting.
pub fn complexity(ir: &QueryIR) -> ComplexityMetrics {
    let pushed: usize = ir
        .base_tables
        .iter()
        .filter_map(TableRef::derived)
        .map(|inner| inner.predicates.len())
        .sum();
    ComplexityMetrics {
        table_count: ir.base_tables.len(),
        join_count: ir.joins.len(),
        predicate_count: ir.predicates.len() + pushed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> SchemaModel {
        summarize_schema(vec![
            RawTable::new("t", 100, &[("x", 10), ("y", 5), ("k", 50)]),
            RawTable::new("u", 50, &[("k", 50), ("z", 3)]),
            RawTable::new("w", 20, &[("z", 3), ("v", 20)]),
        ])
        .unwrap()
    }

    #[test]
    fn complexity_single_table() {
        let ir = parse_sql("SELECT a.x FROM t a", &schema()).unwrap();
        assert_eq!(
            complexity(&ir),
            ComplexityMetrics {
                table_count: 1,
                join_count: 0,
                predicate_count: 0
            }
        );
    }

    #[test]
    fn complexity_three_table_chain() {
        let ir = parse_sql(
            "SELECT a.x FROM t a JOIN u b ON a.k = b.k JOIN w c ON b.z = c.z \
             WHERE a.x > 1 AND c.v = 3",
            &schema(),
        )
        .unwrap();
        let m = complexity(&ir);
        assert_eq!((m.table_count, m.join_count, m.predicate_count), (3, 2, 2));
    }

    #[test]
    fn complexity_ignores_grouping() {
        let s = schema();
        let plain = parse_sql("SELECT a.y FROM t a JOIN u b ON a.k = b.k WHERE a.x > 1", &s).unwrap();
        let grouped = parse_sql(
            "SELECT a.y, COUNT(*) FROM t a JOIN u b ON a.k = b.k WHERE a.x > 1 GROUP BY a.y",
            &s,
        )
        .unwrap();
        assert_eq!(complexity(&plain), complexity(&grouped));
    }

    #[test]
    fn complexity_invariant_under_reordering() {
        let s = schema();
        let mut ir = parse_sql(
            "SELECT a.x FROM t a JOIN u b ON a.k = b.k JOIN w c ON b.z = c.z \
             WHERE a.x > 1 AND c.v = 3 AND b.z <> 2",
            &s,
        )
        .unwrap();
        let before = complexity(&ir);
        ir.predicates.reverse();
        ir.joins.reverse();
        assert_eq!(before, complexity(&ir));
    }

    #[test]
    fn validate_rejects_unknown_alias() {
        let s = schema();
        let mut ir = parse_sql("SELECT a.x FROM t a", &s).unwrap();
        ir.predicates.push(Predicate::new(
            ColumnRef::new("zz", "x"),
            CmpOp::Eq,
            Literal::Int(1),
        ));
        assert_eq!(ir.validate(&s), Err(IrError::UnknownAlias("zz".into())));
    }

    #[test]
    fn validate_rejects_bad_sample_rate() {
        let s = schema();
        let mut ir = parse_sql("SELECT a.x FROM t a", &s).unwrap();
        ir.sample_rate = Some(0.0);
        assert!(matches!(ir.validate(&s), Err(IrError::SampleRate(_))));
    }

    #[test]
    fn derived_output_columns() {
        let s = schema();
        let mut inner = QueryIR::scan("t", "a");
        inner.projections = vec![
            SelectItem::column(ColumnRef::new("a", "k")),
            SelectItem::aggregate(AggFunc::Sum, Some(ColumnRef::new("a", "x"))).named("p0"),
        ];
        inner.group_by = vec![ColumnRef::new("a", "k")];
        let tref = TableRef {
            source: TableSource::Derived(Box::new(inner)),
            alias: "a".into(),
        };
        assert_eq!(tref.output_columns(&s), vec!["k".to_string(), "p0".to_string()]);
        assert_eq!(tref.base_table(), "t");
    }
}

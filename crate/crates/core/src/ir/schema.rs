//! Table statistics used for validation and cardinality estimation.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::IrError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnStat {
    pub name: String,
    pub distinct: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableStat {
    pub name: String,
    pub rows: u64,
    pub columns: Vec<ColumnStat>,
}

impl TableStat {
    pub fn column(&self, name: &str) -> Option<&ColumnStat> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }
}

/// Raw input to [`summarize_schema`]: a table name, its row count and the
/// distinct count of every column, in column order.
#[derive(Debug, Clone)]
pub struct RawTable {
    pub name: String,
    pub rows: u64,
    pub columns: Vec<(String, u64)>,
}

impl RawTable {
    pub fn new(name: impl Into<String>, rows: u64, columns: &[(&str, u64)]) -> Self {
        Self {
            name: name.into(),
            rows,
            columns: columns
                .iter()
                .map(|(c, d)| ((*c).to_string(), *d))
                .collect(),
        }
    }
}

/// Schema statistics keyed by table name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SchemaModel {
    tables: Vec<TableStat>,
    #[serde(skip)]
    index: BTreeMap<String, usize>,
}

impl SchemaModel {
    pub fn tables(&self) -> &[TableStat] {
        &self.tables
    }

    pub fn table(&self, name: &str) -> Option<&TableStat> {
        self.index.get(name).map(|&i| &self.tables[i])
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    /// Distinct count of `table.column`, or `None` if either is unknown.
    pub fn distinct(&self, table: &str, column: &str) -> Option<u64> {
        self.table(table)?.column(column).map(|c| c.distinct)
    }

    /// Reads the JSON-lines schema format: one
    /// `{"name":…, "rows":…, "columns":[{"name":…, "distinct":…}]}` object per line.
    pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Self, IrError> {
        let mut raw = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| IrError::SchemaFile(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let stat: TableStat = serde_json::from_str(&line)
                .map_err(|e| IrError::SchemaFile(format!("line {}: {e}", lineno + 1)))?;
            raw.push(RawTable {
                name: stat.name,
                rows: stat.rows,
                columns: stat.columns.into_iter().map(|c| (c.name, c.distinct)).collect(),
            });
        }
        summarize_schema(raw)
    }

    pub fn write_jsonl<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        for t in &self.tables {
            serde_json::to_writer(&mut writer, t)?;
            writer.write_all(b"\n")?;
        }
        Ok(())
    }
}

impl<'de> Deserialize<'de> for SchemaModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            tables: Vec<TableStat>,
        }
        let repr = Repr::deserialize(d)?;
        summarize_schema(repr.tables.into_iter().map(|t| RawTable {
            name: t.name,
            rows: t.rows,
            columns: t.columns.into_iter().map(|c| (c.name, c.distinct)).collect(),
        }))
        .map_err(serde::de::Error::custom)
    }
}

/// Builds a [`SchemaModel`], clamping every distinct count to its table's row count.
pub fn summarize_schema<I>(raw: I) -> Result<SchemaModel, IrError>
where
    I: IntoIterator<Item = RawTable>,
{
    let mut model = SchemaModel::default();
    for t in raw {
        let name = t.name.to_ascii_lowercase();
        if name.is_empty() {
            return Err(IrError::EmptyName);
        }
        if model.index.contains_key(&name) {
            return Err(IrError::DuplicateTable(name));
        }
        let mut columns: Vec<ColumnStat> = Vec::with_capacity(t.columns.len());
        for (c, distinct) in t.columns {
            let c = c.to_ascii_lowercase();
            if c.is_empty() {
                return Err(IrError::EmptyName);
            }
            if columns.iter().any(|x| x.name == c) {
                return Err(IrError::DuplicateColumn { table: name, column: c });
            }
            columns.push(ColumnStat {
                name: c,
                distinct: distinct.min(t.rows),
            });
        }
        model.index.insert(name.clone(), model.tables.len());
        model.tables.push(TableStat {
            name,
            rows: t.rows,
            columns,
        });
    }
    Ok(model)
}

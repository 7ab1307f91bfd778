use std::cmp::Ordering;
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::EngineError;
use crate::ir::Literal;

/// A cell value. `Null` only arises from aggregates over empty input.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Value {
    Null,
    Int(i64),
    Float(f64),
    Str(String),
}

impl Value {
    /// Parses a CSV field: integer, then decimal, else string.
    pub fn parse_field(s: &str) -> Value {
        if let Ok(i) = s.parse::<i64>() {
            Value::Int(i)
        } else if let Ok(f) = s.parse::<f64>() {
            Value::Float(f)
        } else {
            Value::Str(s.to_string())
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Float(f) => Some(*f),
            _ => None,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Null => 0,
            Value::Int(_) | Value::Float(_) => 1,
            Value::Str(_) => 2,
        }
    }

    /// SQL comparison: numbers with numbers, strings with strings.
    pub fn sql_cmp(&self, other: &Value) -> Result<Option<Ordering>, EngineError> {
        match (self, other) {
            (Value::Null, _) | (_, Value::Null) => Ok(None),
            (Value::Str(a), Value::Str(b)) => Ok(Some(a.cmp(b))),
            (Value::Str(_), _) | (_, Value::Str(_)) => Err(EngineError::TypeMismatch(format!(
                "cannot compare {self} with {other}"
            ))),
            _ => Ok(Some(self.cmp(other))),
        }
    }
}

impl From<&Literal> for Value {
    fn from(l: &Literal) -> Self {
        match l {
            Literal::Int(i) => Value::Int(*i),
            Literal::Decimal(d) => Value::Float(*d),
            Literal::Str(s) => Value::Str(s.clone()),
        }
    }
}

/// Total order: `Null` < numbers < strings; integers and floats compare numerically.
impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Str(a), Value::Str(b)) => a.cmp(b),
            (a, b) if a.rank() == 1 && b.rank() == 1 => {
                a.as_f64().unwrap().total_cmp(&b.as_f64().unwrap())
            }
            (a, b) => a.rank().cmp(&b.rank()),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("NULL"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x}"),
            Value::Str(s) => write!(f, "'{s}'"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Relation {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Relation {
    pub fn new(columns: Vec<String>, rows: Vec<Vec<Value>>) -> Result<Self, EngineError> {
        if let Some(r) = rows.iter().find(|r| r.len() != columns.len()) {
            return Err(EngineError::Arity {
                expected: columns.len(),
                found: r.len(),
            });
        }
        Ok(Self { columns, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Reads a CSV table whose header row names the columns.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, EngineError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let columns: Vec<String> = rdr
            .headers()
            .map_err(|e| EngineError::Csv(e.to_string()))?
            .iter()
            .map(|h| h.trim().to_ascii_lowercase())
            .collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| EngineError::Csv(e.to_string()))?;
            rows.push(rec.iter().map(|f| Value::parse_field(f.trim())).collect());
        }
        Relation::new(columns, rows)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), EngineError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.columns).map_err(|e| EngineError::Csv(e.to_string()))?;
        for row in &self.rows {
            let fields: Vec<String> = row
                .iter()
                .map(|v| match v {
                    Value::Null => String::new(),
                    Value::Int(i) => i.to_string(),
                    Value::Float(f) => f.to_string(),
                    Value::Str(s) => s.clone(),
                })
                .collect();
            w.write_record(&fields).map_err(|e| EngineError::Csv(e.to_string()))?;
        }
        w.flush().map_err(|e| EngineError::Csv(e.to_string()))
    }

    /// Distinct count per column, for building schema statistics.
    pub fn distinct_counts(&self) -> Vec<u64> {
        (0..self.columns.len())
            .map(|c| {
                let mut vals: Vec<&Value> = self.rows.iter().map(|r| &r[c]).collect();
                vals.sort();
                vals.dedup();
                vals.len() as u64
            })
            .collect()
    }
}

fn approx_eq(a: &Value, b: &Value, rel_tol: f64) -> bool {
    match (a, b) {
        (Value::Float(_), _) | (_, Value::Float(_)) => match (a.as_f64(), b.as_f64()) {
            (Some(x), Some(y)) => {
                let scale = x.abs().max(y.abs()).max(1.0);
                (x - y).abs() <= rel_tol * scale
            }
            _ => a == b,
        },
        _ => a == b,
    }
}

/// Multiset equality of row sets, ignoring column names and row order.
/// Numeric cells containing floats compare with relative tolerance `rel_tol`,
/// absorbing summation-order differences.
pub fn multiset_eq(a: &Relation, b: &Relation, rel_tol: f64) -> bool {
    if a.columns.len() != b.columns.len() || a.rows.len() != b.rows.len() {
        return false;
    }
    let mut ra: Vec<&Vec<Value>> = a.rows.iter().collect();
    let mut rb: Vec<&Vec<Value>> = b.rows.iter().collect();
    ra.sort();
    rb.sort();
    ra.iter()
        .zip(&rb)
        .all(|(x, y)| x.iter().zip(y.iter()).all(|(p, q)| approx_eq(p, q, rel_tol)))
}

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EngineError;

/// One executed (query, arm) pair. Serializes to exactly these seven fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRecord {
    pub query_id: String,
    pub arm: usize,
    pub flags: String,
    pub latency_ms: f64,
    pub memory_bytes: f64,
    pub feasible: bool,
    pub seed: u64,
}

/// Append-only execution log.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExecutionTrace {
    pub records: Vec<TraceRecord>,
}

impl ExecutionTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: TraceRecord) {
        self.records.push(record);
    }

    pub fn extend(&mut self, other: ExecutionTrace) {
        self.records.extend(other.records);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<(), EngineError> {
        let io = |e: std::io::Error| EngineError::Io(format!("{}: {e}", path.display()));
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        for r in &self.records {
            let line = serde_json::to_string(r).map_err(|e| EngineError::Io(e.to_string()))?;
            writeln!(w, "{line}").map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn read_jsonl(path: &Path) -> Result<Self, EngineError> {
        let io = |e: std::io::Error| EngineError::Io(format!("{}: {e}", path.display()));
        let reader = BufReader::new(File::open(path).map_err(io)?);
        let mut records = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(io)?;
            if line.trim().is_empty() {
                continue;
            }
            let rec = serde_json::from_str(&line)
                .map_err(|e| EngineError::Io(format!("{} line {}: {e}", path.display(), n + 1)))?;
            records.push(rec);
        }
        Ok(Self { records })
    }
}

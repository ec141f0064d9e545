//! Tabular results and their CSV / JSON encodings.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quench::EchoSeries;

/// One cell. Floats are written with 17 significant digits, enough to
/// round-trip every `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x:.16e}"),
            Value::Text(s) => f.write_str(s),
        }
    }
}

impl Value {
    /// Inverse of `Display` for CSV cells.
    fn parse_cell(cell: &str) -> Value {
        match cell {
            "true" => return Value::Bool(true),
            "false" => return Value::Bool(false),
            _ => {}
        }
        if let Ok(i) = cell.parse::<i64>() {
            return Value::Int(i);
        }
        let numeric = cell.contains(['e', '.']) || matches!(cell, "NaN" | "inf" | "-inf");
        match cell.parse::<f64>() {
            Ok(x) if numeric => Value::Float(x),
            _ => Value::Text(cell.to_string()),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Float(x) => Some(*x),
            Value::Int(i) => Some(*i as f64),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Float(x)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<usize> for Value {
    fn from(i: usize) -> Self {
        Value::Int(i as i64)
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Text(s)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub plan: serde_json::Value,
    pub code_version: String,
    pub timestamp: String,
}

impl Metadata {
    /// Stamps `plan` with the crate version and the current Unix time.
    pub fn now(plan: serde_json::Value) -> Self {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Self { plan, code_version: env!("CARGO_PKG_VERSION").to_string(), timestamp: secs.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub schema: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub metadata: Metadata,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::invalid(format!("unknown format '{other}'"))),
        }
    }
}

impl Dataset {
    pub fn new(schema: Vec<String>, metadata: Metadata) -> Self {
        Self { schema, rows: Vec::new(), metadata }
    }

    pub fn push(&mut self, row: Vec<Value>) -> Result<()> {
        if row.len() != self.schema.len() {
            return Err(Error::invalid(format!("row has {} fields, schema has {}", row.len(), self.schema.len())));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|c| c == name)
    }

    /// Column `name` as floats; `None` if missing or non-numeric.
    pub fn floats(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.column(name)?;
        self.rows.iter().map(|r| r[c].as_f64()).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let wrap = |e: csv::Error| Error::invalid(format!("csv: {e}"));
        w.write_record(&self.schema).map_err(wrap)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string())).map_err(wrap)?;
        }
        w.flush().map_err(|e| Error::invalid(format!("csv: {e}")))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("dataset serializes");
        s.push('\n');
        s
    }

    pub fn encode(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv_string(),
            Format::Json => self.to_json_string(),
        }
    }

    /// Reads CSV produced by `write_csv`. Metadata is not part of the CSV
    /// encoding and comes back empty.
    pub fn from_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let wrap = |e: csv::Error| Error::Parse(e.to_string());
        let schema: Vec<String> = r.headers().map_err(wrap)?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for record in r.records() {
            let record = record.map_err(wrap)?;
            rows.push(record.iter().map(Value::parse_cell).collect());
        }
        let metadata = Metadata { plan: serde_json::Value::Null, code_version: String::new(), timestamp: String::new() };
        Ok(Self { schema, rows, metadata })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ds: Dataset = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if let Some(bad) = ds.rows.iter().find(|r| r.len() != ds.schema.len()) {
            return Err(Error::Parse(format!("row with {} fields, schema has {}", bad.len(), ds.schema.len())));
        }
        Ok(ds)
    }
}

pub fn write_dataset(dataset: &Dataset, format: Format, path: &Path) -> Result<()> {
    let io = |source| Error::Io { path: path.to_path_buf(), source };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    w.write_all(dataset.encode(format).as_bytes()).map_err(io)?;
    w.flush().map_err(io)
}

pub fn read_dataset(format: Format, path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    match format {
        Format::Csv => Dataset::from_csv(text.as_bytes()),
        Format::Json => Dataset::from_json(&text),
    }
}

/// Echo series as columns `t, L, is_revival`.
pub fn echo_dataset(series: &EchoSeries, metadata: Metadata) -> Dataset {
    let mut ds = Dataset::new(vec!["t".into(), "L".into(), "is_revival".into()], metadata);
    for i in 0..series.times.len() {
        ds.rows.push(vec![series.times[i].into(), series.values[i].into(), series.is_revival(i).into()]);
    }
    ds
}

//! Command results and their deterministic JSON / CSV rendering.
//!
//! Floats are rounded to 15 significant digits, `-0` prints as `0` and
//! non-finite values as `null`. JSON objects have sorted keys.

use num_complex::Complex64 as C64;
use serde_json::{Map, Number, Value};

use crate::config::Format;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Complex(C64),
    Int(i64),
    Text(String),
    Bool(bool),
    Null,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<C64> for Cell {
    fn from(z: C64) -> Self {
        Cell::Complex(z)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as i64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map(Into::into).unwrap_or(Cell::Null)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width for table {}",
            self.name
        );
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub scalars: Vec<(String, Cell)>,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            scalars: Vec::new(),
            tables: Vec::new(),
        }
    }

    pub fn scalar(&mut self, key: &str, value: impl Into<Cell>) {
        self.scalars.push((key.to_string(), value.into()));
    }

    pub fn get(&self, key: &str) -> Option<&Cell> {
        self.scalars.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

/// Rounds to 15 significant digits; `None` for non-finite input.
pub fn round15(x: f64) -> Option<f64> {
    if !x.is_finite() {
        return None;
    }
    if x == 0.0 {
        return Some(0.0);
    }
    let r: f64 = format!("{x:.14e}").parse().ok()?;
    Some(if r == 0.0 { 0.0 } else { r })
}

fn number(x: f64) -> Value {
    round15(x)
        .and_then(Number::from_f64)
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

pub fn cell_json(cell: &Cell) -> Value {
    match cell {
        Cell::Float(x) => number(*x),
        Cell::Complex(z) => {
            let mut m = Map::new();
            m.insert("re".into(), number(z.re));
            m.insert("im".into(), number(z.im));
            Value::Object(m)
        }
        Cell::Int(n) => Value::from(*n),
        Cell::Text(s) => Value::String(s.clone()),
        Cell::Bool(b) => Value::Bool(*b),
        Cell::Null => Value::Null,
    }
}

/// Rounds every float inside an arbitrary JSON value.
pub fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => number(n.as_f64().unwrap_or(f64::NAN)),
        Value::Array(a) => Value::Array(a.into_iter().map(round_value).collect()),
        Value::Object(m) => {
            Value::Object(m.into_iter().map(|(k, v)| (k, round_value(v))).collect())
        }
        other => other,
    }
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Provenance header echoed into every output.
#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub tolerances: Value,
    pub model: Value,
    pub settings: Vec<(String, Value)>,
}

pub fn render(report: &Report, header: &Header, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => Ok(render_json(report, header)),
        Format::Csv => render_csv(report, header),
    }
}

pub fn render_json(report: &Report, header: &Header) -> String {
    let mut head = Map::new();
    head.insert("tolerances".into(), round_value(header.tolerances.clone()));
    head.insert("model".into(), round_value(header.model.clone()));
    for (k, v) in &header.settings {
        head.insert(k.clone(), round_value(v.clone()));
    }
    let mut results = Map::new();
    for (k, v) in &report.scalars {
        results.insert(k.clone(), cell_json(v));
    }
    let mut tables = Map::new();
    for t in &report.tables {
        let rows = t
            .rows
            .iter()
            .map(|row| {
                let mut m = Map::new();
                for (c, v) in t.columns.iter().zip(row) {
                    m.insert(c.clone(), cell_json(v));
                }
                Value::Object(m)
            })
            .collect();
        tables.insert(t.name.clone(), Value::Array(rows));
    }
    let mut doc = Map::new();
    doc.insert("command".into(), Value::String(report.command.clone()));
    doc.insert("header".into(), Value::Object(head));
    doc.insert("results".into(), Value::Object(results));
    doc.insert("tables".into(), Value::Object(tables));
    let mut out = serde_json::to_string_pretty(&Value::Object(doc)).unwrap_or_default();
    out.push('\n');
    out
}

/// Flattens a JSON value into `prefix.key` pairs in sorted order.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, v) in m {
                flatten(&format!("{prefix}.{k}"), v, out);
            }
        }
        other => out.push((prefix.to_string(), scalar_text(other))),
    }
}

fn cell_fields(cell: &Cell) -> Vec<String> {
    match cell {
        Cell::Complex(z) => vec![scalar_text(&number(z.re)), scalar_text(&number(z.im))],
        other => vec![scalar_text(&cell_json(other))],
    }
}

/// Comment lines carry the header and scalars; each table follows under a
/// `# table,<name>` line. Complex columns split into `<name>.re,<name>.im`.
pub fn render_csv(report: &Report, header: &Header) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new()
        .flexible(true)
        .from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(["# command", &report.command]).map_err(io)?;
    let mut head = Vec::new();
    flatten(
        "# tolerance",
        &round_value(header.tolerances.clone()),
        &mut head,
    );
    flatten("# model", &round_value(header.model.clone()), &mut head);
    for (k, v) in &header.settings {
        flatten(&format!("# {k}"), &round_value(v.clone()), &mut head);
    }
    for (k, v) in &head {
        w.write_record([k, v]).map_err(io)?;
    }
    for (k, v) in &report.scalars {
        let mut rec = vec![format!("# result.{k}")];
        rec.extend(cell_fields(v));
        w.write_record(&rec).map_err(io)?;
    }
    for t in &report.tables {
        w.write_record(["# table", &t.name]).map_err(io)?;
        let mut cols = Vec::new();
        for (i, c) in t.columns.iter().enumerate() {
            let complex = t.rows.iter().any(|r| matches!(r[i], Cell::Complex(_)));
            if complex {
                cols.push(format!("{c}.re"));
                cols.push(format!("{c}.im"));
            } else {
                cols.push(c.clone());
            }
        }
        w.write_record(&cols).map_err(io)?;
        for row in &t.rows {
            let mut rec = Vec::new();
            for (i, cell) in row.iter().enumerate() {
                let complex = t.rows.iter().any(|r| matches!(r[i], Cell::Complex(_)));
                match cell {
                    Cell::Null if complex => rec.extend([String::new(), String::new()]),
                    other => rec.extend(cell_fields(other)),
                }
            }
            w.write_record(&rec).map_err(io)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

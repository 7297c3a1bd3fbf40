//! Tabular reports rendered as CSV or JSON from one set of typed cells.

use std::io::{self, Write};
use std::path::Path;

use serde_json::{Map, Value};

use crate::inequality::{format_float, InequalityReport};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    Json(Value),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Float(x) => format_float(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Json(v) => v.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Float(x) if x.is_finite() => Value::from(*x),
            Cell::Float(x) => Value::from(format_float(*x)),
            Cell::Int(i) => Value::from(*i),
            Cell::Bool(b) => Value::from(*b),
            Cell::Text(s) => Value::from(s.clone()),
            Cell::Json(v) => v.clone(),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Float)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.into())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }
}

pub const INEQUALITY_COLUMNS: [&str; 8] = [
    "label",
    "lhs",
    "rhs",
    "slack",
    "tolerance",
    "passed",
    "trivial_pass",
    "inputs",
];

pub fn inequality_table(reports: &[InequalityReport]) -> Table {
    let mut t = Table::new(INEQUALITY_COLUMNS.to_vec());
    for r in reports {
        t.push(vec![
            r.label.as_str().into(),
            r.lhs.into(),
            r.rhs.into(),
            match r.slack {
                Some(s) => Cell::Float(s),
                None => Cell::Text("+inf".into()),
            },
            r.tolerance.into(),
            r.passed.into(),
            r.trivial_pass.into(),
            Cell::Json(serde_json::to_value(&r.inputs).unwrap_or(Value::Null)),
        ]);
    }
    t
}

/// First line of CSV reports and the `generated` key of JSON reports.
pub fn timestamp_line() -> String {
    format!(
        "generated by potential-lab {} at {}",
        env!("CARGO_PKG_VERSION"),
        chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
    )
}

pub fn render_csv(table: &Table, timestamp: Option<&str>) -> Result<String, csv::Error> {
    let mut out = Vec::new();
    if let Some(ts) = timestamp {
        writeln!(out, "# {ts}").map_err(csv::Error::from)?;
    }
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut out);
        w.write_record(&table.columns)?;
        for row in &table.rows {
            w.write_record(row.iter().map(Cell::csv))?;
        }
        w.flush()?;
    }
    Ok(String::from_utf8(out).expect("csv output is UTF-8"))
}

/// `{"command", "generated"?, "config", "rows", "summary"}` with rows keyed by column.
pub fn render_json(command: &str, config: Value, table: &Table, summary: Value, timestamp: Option<&str>) -> String {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|row| {
            let mut obj = Map::new();
            for (c, cell) in table.columns.iter().zip(row) {
                obj.insert((*c).to_string(), cell.json());
            }
            Value::Object(obj)
        })
        .collect();
    let mut doc = Map::new();
    doc.insert("command".into(), Value::from(command));
    if let Some(ts) = timestamp {
        doc.insert("generated".into(), Value::from(ts));
    }
    doc.insert("config".into(), config);
    doc.insert("rows".into(), Value::Array(rows));
    doc.insert("summary".into(), summary);
    let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("serializable");
    s.push('\n');
    s
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

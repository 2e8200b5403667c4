//! Tabular results written as CSV (plus a `.meta.json` sidecar) or as one
//! JSON document.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde_json::{json, Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Field {
    Num(f64),
    Text(String),
}

impl From<f64> for Field {
    fn from(x: f64) -> Self {
        Field::Num(x)
    }
}

impl From<&str> for Field {
    fn from(s: &str) -> Self {
        Field::Text(s.to_string())
    }
}

impl Field {
    fn is_finite(&self) -> bool {
        match self {
            Field::Num(x) => x.is_finite(),
            Field::Text(_) => true,
        }
    }

    fn csv(&self) -> String {
        match self {
            Field::Num(x) => format!("{x:.16e}"),
            Field::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Field::Num(x) => json!(x),
            Field::Text(s) => json!(s),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Field>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Field>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Replaces rows holding a non-finite number by a sentinel row that
    /// keeps the first field and marks the rest `nan`; returns how many.
    fn sanitize(&self) -> (Vec<Vec<Field>>, usize) {
        let mut bad = 0;
        let rows = self
            .rows
            .iter()
            .map(|row| {
                if row.iter().all(Field::is_finite) {
                    row.clone()
                } else {
                    bad += 1;
                    let mut sentinel = vec![row[0].clone()];
                    sentinel.extend((1..row.len()).map(|_| Field::Text("nan".into())));
                    sentinel
                }
            })
            .collect();
        (rows, bad)
    }
}

pub fn meta_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Writes `table` and `meta` to `out`; returns the number of sentinel rows.
pub fn write(
    out: &Path,
    format: Format,
    table: &Table,
    mut meta: Map<String, Value>,
) -> io::Result<usize> {
    let (rows, bad) = table.sanitize();
    meta.insert("nonfinite_rows".into(), json!(bad));
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(BufWriter::new(File::create(out)?));
            w.write_record(&table.columns)?;
            for row in &rows {
                w.write_record(row.iter().map(Field::csv))?;
            }
            w.flush()?;
            write_json(&meta_path(out), &Value::Object(meta))?;
        }
        Format::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|r| Value::Array(r.iter().map(Field::json).collect()))
                .collect();
            meta.insert("columns".into(), json!(table.columns));
            meta.insert("rows".into(), Value::Array(rows));
            write_json(out, &Value::Object(meta))?;
        }
    }
    Ok(bad)
}

fn write_json(path: &Path, value: &Value) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()
}

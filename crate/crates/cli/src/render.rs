//! Plain, JSON and CSV rendering of command results.

use std::io::{self, Write};

use bstoeplitz_core::Complex64;
use clap::ValueEnum;
use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Plain,
    Json,
    Csv,
}

/// Twelve decimals with trailing zeros removed; `-0` prints as `0`.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// A float as a JSON number carrying exactly the digits of [`num`].
pub fn num_value(x: f64) -> Value {
    let text = num(x);
    text.parse::<serde_json::Number>().map(Value::Number).unwrap_or(Value::String(text))
}

pub fn complex_text(z: Complex64) -> String {
    let (re, im) = (num(z.re), num(z.im));
    match im.as_str() {
        "0" => re,
        _ if im.starts_with('-') => format!("{re} - {}i", &im[1..]),
        _ => format!("{re} + {im}i"),
    }
}

pub fn complex_value(z: Complex64) -> Value {
    let mut m = Map::new();
    m.insert("re".into(), num_value(z.re));
    m.insert("im".into(), num_value(z.im));
    Value::Object(m)
}

fn is_complex(m: &Map<String, Value>) -> bool {
    m.len() == 2 && m.contains_key("re") && m.contains_key("im")
}

/// Text of a scalar-like value for plain output and CSV cells.
pub fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        Value::Bool(b) => b.to_string(),
        Value::Object(m) if is_complex(m) => {
            let part = |k: &str| m[k].as_f64().unwrap_or(f64::NAN);
            complex_text(Complex64::new(part("re"), part("im")))
        }
        Value::Array(items) if items.iter().all(|i| !i.is_object() && !i.is_array()) => {
            format!("[{}]", items.iter().map(cell).collect::<Vec<_>>().join(", "))
        }
        other => other.to_string(),
    }
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// A command result: key/value fields followed by an optional table.
#[derive(Clone, Debug, Default)]
pub struct Output {
    pub fields: Map<String, Value>,
    pub table: Option<Table>,
    /// Free text appended to plain output only (e.g. a verifier report).
    pub text: Option<String>,
    /// When set, plain output is exactly this text.
    pub plain_override: Option<String>,
}

impl Output {
    pub fn field(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.fields.insert(key.into(), value.into());
        self
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> io::Result<()> {
        match format {
            Format::Plain => self.write_plain(out),
            Format::Json => self.write_json(out),
            Format::Csv => self.write_csv(out),
        }
    }

    fn write_plain(&self, out: &mut dyn Write) -> io::Result<()> {
        if let Some(text) = &self.plain_override {
            return out.write_all(text.as_bytes());
        }
        for (k, v) in &self.fields {
            match v {
                Value::Array(items) if items.iter().any(Value::is_object) && !items.is_empty() => {
                    writeln!(out, "{k}:")?;
                    for item in items {
                        let parts: Vec<String> = match item {
                            Value::Object(m) if !is_complex(m) => {
                                m.iter().map(|(k, v)| format!("{k}={}", cell(v))).collect()
                            }
                            other => vec![cell(other)],
                        };
                        writeln!(out, "  {}", parts.join(" "))?;
                    }
                }
                _ => writeln!(out, "{k}: {}", cell(v))?,
            }
        }
        if let Some(t) = &self.table {
            self.write_table(t, out)?;
        }
        if let Some(text) = &self.text {
            write!(out, "{text}")?;
        }
        Ok(())
    }

    fn write_table(&self, t: &Table, out: &mut dyn Write) -> io::Result<()> {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(&t.columns).map_err(io::Error::other)?;
        for row in &t.rows {
            w.write_record(row.iter().map(cell)).map_err(io::Error::other)?;
        }
        out.write_all(&w.into_inner().map_err(|e| io::Error::other(e.to_string()))?)
    }

    fn write_json(&self, out: &mut dyn Write) -> io::Result<()> {
        let mut doc = self.fields.clone();
        if let Some(t) = &self.table {
            let rows = t
                .rows
                .iter()
                .map(|r| Value::Object(t.columns.iter().cloned().zip(r.iter().cloned()).collect()))
                .collect();
            doc.insert("rows".into(), Value::Array(rows));
        }
        serde_json::to_writer_pretty(&mut *out, &Value::Object(doc))?;
        writeln!(out)
    }

    fn write_csv(&self, out: &mut dyn Write) -> io::Result<()> {
        match &self.table {
            Some(t) => self.write_table(t, out),
            None => {
                let cols: Vec<&str> = self.fields.keys().map(String::as_str).collect();
                let mut t = Table::new(&cols);
                t.push(self.fields.values().cloned().collect());
                self.write_table(&t, out)
            }
        }
    }
}

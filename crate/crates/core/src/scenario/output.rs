//! Artifact formatting: fixed 17-significant-digit numbers, CSV tables with a
//! provenance comment line, and JSON with normalized floats.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{Number, Value};

use crate::error::Result;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Float(x) => fmt_f64(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

/// `{:.16e}`: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Header comment line, column header and rows.
    pub fn to_csv(&self, comment: &str) -> Result<Vec<u8>> {
        let mut buf = format!("# {comment}\n").into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(&self.header)?;
            for r in &self.rows {
                w.write_record(r.iter().map(Cell::render))?;
            }
            w.flush()?;
        }
        Ok(buf)
    }
}

/// Plot data in long form: `x, y, series`.
pub fn plot_table() -> Table {
    Table::new(["x", "y", "series"])
}

/// Rewrites every non-integer number in `v` with 17 significant digits.
pub fn normalize(v: Value) -> Value {
    match v {
        Value::Number(n) => {
            let s = n.to_string();
            if s.contains(['.', 'e', 'E']) {
                match n.as_f64() {
                    Some(x) if x.is_finite() => Value::Number(Number::from_str(&fmt_f64(x)).unwrap_or(n)),
                    _ => Value::Number(n),
                }
            } else {
                Value::Number(n)
            }
        }
        Value::Array(a) => Value::Array(a.into_iter().map(normalize).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, normalize(v))).collect()),
        other => other,
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Value> {
    Ok(normalize(serde_json::to_value(value)?))
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn numbers_have_17_significant_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        let v = normalize(json!({"a": 0.5, "b": [1, 2.25], "c": "x"}));
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"{"a":5.0000000000000000e-1,"b":[1,2.2500000000000000e+0],"c":"x"}"#);
        let back: f64 = serde_json::from_value(v["a"].clone()).unwrap();
        assert_eq!(back, 0.5);
    }

    #[test]
    fn csv_has_comment_and_header() {
        let mut t = Table::new(["x", "label"]);
        t.push(vec![0.25.into(), "a".into()]);
        let s = String::from_utf8(t.to_csv("config_hash=ab seed=0").unwrap()).unwrap();
        assert_eq!(s, "# config_hash=ab seed=0\nx,label\n2.5000000000000000e-1,a\n");
    }
}
